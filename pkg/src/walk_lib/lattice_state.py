"""
States on ℓ²(ℤ)⊗ℂ² with compact support, their CMV re-indexing and the
position observable.

A `WalkState` stores the window [lo, hi] and an array of shape (n_sites, 2)
holding the interleaved pairs (ψ⁺(j), ψ⁻(j)). Because the CMV identification
sends δ_j⁺ to 2j−1 and δ_j⁻ to 2j, the flattened array *is* the CMV vector
starting at index 2·lo−1, so the re-indexing never touches the amplitudes.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from walk_lib.enums import Spin
from walk_lib.errors import InvalidArgumentError
from walk_lib.helpers import ceil_half

STATE_COLUMNS = ["site", "re_plus", "im_plus", "re_minus", "im_minus"]


@dataclass(frozen=True, eq=False)
class WalkState:
    lo: int
    amps: NDArray[np.complex128]

    def __post_init__(self) -> None:
        if self.amps.ndim != 2 or self.amps.shape[1] != 2:
            raise InvalidArgumentError(f"Amplitudes must have shape (n_sites, 2), got {self.amps.shape}")
        if self.amps.shape[0] == 0:
            raise InvalidArgumentError("A state needs a window of at least one site.")

    @classmethod
    def zeros(cls, lo: int, hi: int) -> WalkState:
        if hi < lo:
            raise InvalidArgumentError(f"Empty window [{lo}, {hi}]")
        return cls(lo=lo, amps=np.zeros((hi - lo + 1, 2), dtype=np.complex128))

    @classmethod
    def delta(cls, site: int, spin: Spin) -> WalkState:
        amps = np.zeros((1, 2), dtype=np.complex128)
        amps[0, 0 if spin == Spin.PLUS else 1] = 1.0
        return cls(lo=site, amps=amps)

    @classmethod
    def from_components(cls, lo: int, plus: NDArray, minus: NDArray) -> WalkState:
        plus = np.asarray(plus, dtype=np.complex128)
        minus = np.asarray(minus, dtype=np.complex128)
        if plus.shape != minus.shape or plus.ndim != 1:
            raise InvalidArgumentError("Spin components must be one-dimensional arrays of equal length.")
        return cls(lo=lo, amps=np.stack([plus, minus], axis=1))

    @property
    def hi(self) -> int:
        return self.lo + self.amps.shape[0] - 1

    @property
    def n_sites(self) -> int:
        return self.amps.shape[0]

    @property
    def sites(self) -> NDArray[np.int64]:
        return np.arange(self.lo, self.hi + 1, dtype=np.int64)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> WalkState:
        norm = self.norm()
        if norm == 0.0:
            raise InvalidArgumentError("Cannot normalize the zero state.")
        return WalkState(lo=self.lo, amps=self.amps / norm)

    def amplitude(self, site: int, spin: Spin) -> complex:
        if site < self.lo or site > self.hi:
            return 0j
        return complex(self.amps[site - self.lo, 0 if spin == Spin.PLUS else 1])

    def support(self) -> Optional[Tuple[int, int]]:
        """First and last site carrying a nonzero amplitude, or None for the zero state."""
        nonzero = np.flatnonzero(np.any(self.amps != 0, axis=1))
        if len(nonzero) == 0:
            return None
        return self.lo + int(nonzero[0]), self.lo + int(nonzero[-1])

    def extended(self, lo: int, hi: int) -> WalkState:
        """Embeds the state into the larger window [lo, hi]."""
        if lo > self.lo or hi < self.hi:
            raise InvalidArgumentError(f"Window [{lo}, {hi}] does not contain [{self.lo}, {self.hi}]")
        amps = np.zeros((hi - lo + 1, 2), dtype=np.complex128)
        amps[self.lo - lo: self.hi - lo + 1] = self.amps
        return WalkState(lo=lo, amps=amps)

    def trimmed(self) -> WalkState:
        """Drops exactly-zero sites at both ends of the window."""
        bounds = self.support()
        if bounds is None:
            return WalkState(lo=self.lo, amps=self.amps[:1].copy())
        first, last = bounds
        return WalkState(lo=first, amps=self.amps[first - self.lo: last - self.lo + 1].copy())

    def copy(self) -> WalkState:
        return WalkState(lo=self.lo, amps=self.amps.copy())


@dataclass(frozen=True, eq=False)
class CmvVector:
    """Finitely supported sequence over CMV indices start, start+1, ..."""
    start: int
    values: NDArray[np.complex128]

    @property
    def stop(self) -> int:
        return self.start + len(self.values) - 1

    @property
    def indices(self) -> NDArray[np.int64]:
        return np.arange(self.start, self.start + len(self.values), dtype=np.int64)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def aligned(self) -> CmvVector:
        """Pads with zeros so the vector starts at an odd index and ends at an even one."""
        start, values = self.start, self.values
        if len(values) == 0:
            return CmvVector(start=start | 1, values=np.zeros(2, dtype=np.complex128))
        if start % 2 == 0:
            values = np.concatenate((np.zeros(1, dtype=np.complex128), values))
            start -= 1
        if (start + len(values) - 1) % 2 == 1:
            values = np.concatenate((values, np.zeros(1, dtype=np.complex128)))
        return CmvVector(start=start, values=np.asarray(values, dtype=np.complex128))


def cmv_index(site: int, spin: Spin) -> int:
    """δ_j⁺ ↦ 2j−1 and δ_j⁻ ↦ 2j."""
    return 2 * site - 1 if spin == Spin.PLUS else 2 * site


def site_of_cmv_index(n: int) -> Tuple[int, Spin]:
    if n % 2 == 0:
        return n // 2, Spin.MINUS
    return (n + 1) // 2, Spin.PLUS


def to_cmv(state: WalkState) -> CmvVector:
    return CmvVector(start=2 * state.lo - 1, values=state.amps.reshape(-1).copy())


def from_cmv(seq: CmvVector) -> WalkState:
    aligned = seq.aligned()
    lo = (aligned.start + 1) // 2
    return WalkState(lo=lo, amps=aligned.values.reshape(-1, 2).copy())


def apply_position(state: WalkState) -> WalkState:
    """Q ψ, unnormalized."""
    return WalkState(lo=state.lo, amps=state.amps * state.sites[:, None])


def apply_cmv_position(seq: CmvVector) -> CmvVector:
    """Q on the CMV side: multiplication by the site ⌈n/2⌉ of each index."""
    return CmvVector(start=seq.start, values=seq.values * ceil_half(seq.indices))


def write_state_csv(path: Path, state: WalkState) -> None:
    with open(path, "w", newline="") as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=STATE_COLUMNS)
        writer.writeheader()
        for row in state_rows(state):
            writer.writerow(row)


def state_rows(state: WalkState) -> Iterable[dict]:
    for site, (plus, minus) in zip(state.sites.tolist(), state.amps.tolist()):
        yield {
            "site": site,
            "re_plus": repr(plus.real),
            "im_plus": repr(plus.imag),
            "re_minus": repr(minus.real),
            "im_minus": repr(minus.imag),
        }


def read_state_csv(path: Path) -> WalkState:
    """Reads a snapshot; missing sites inside the covered range are zero."""
    entries: dict[int, tuple[complex, complex]] = {}
    try:
        with open(path, "r", newline="") as csvfile:
            reader = csv.DictReader(csvfile)
            for row in reader:
                site = int(row["site"])
                plus = complex(float(row["re_plus"]), float(row["im_plus"]))
                minus = complex(float(row["re_minus"]), float(row["im_minus"]))
                entries[site] = (plus, minus)
    except (KeyError, ValueError) as e:
        raise InvalidArgumentError(f"Malformed state snapshot {path}: {e}") from e
    if not entries:
        raise InvalidArgumentError(f"State snapshot {path} has no rows.")
    lo, hi = min(entries), max(entries)
    state = WalkState.zeros(lo, hi)
    for site, (plus, minus) in entries.items():
        state.amps[site - lo] = (plus, minus)
    return state
