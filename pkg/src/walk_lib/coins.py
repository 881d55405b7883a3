"""
Coin sequences n ↦ (a(n), b(n)) for the split-step walk.

Every local coin is the unitary [[a, b], [−conj(b), conj(a)]]. Sequences are
total functions of the site and are evaluated lazily through `entries`, which
returns the a and b columns for an array of sites. The scalar `coin_at` is a
thin view on top of it.
"""
from __future__ import annotations

import csv
import math
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from walk_lib.constants import INV_SQRT2, RANDOM_BLOCK_SIZE, UNITARITY_TOL
from walk_lib.enums import BarrierKind, CoinKind, DecayKind
from walk_lib.errors import CoinTableError, InvalidArgumentError, InvalidCoinError, InvalidParameterError
from walk_lib.helpers import zigzag
from walk_lib.subsequence import SparseSubsequence

CoinColumns = Tuple[NDArray[np.complex128], NDArray[np.complex128]]
TABLE_COLUMNS = ["n", "re_a", "im_a", "re_b", "im_b"]


@dataclass(frozen=True)
class LocalCoin:
    a: complex
    b: complex

    def __post_init__(self) -> None:
        defect = abs(abs(self.a) ** 2 + abs(self.b) ** 2 - 1.0)
        if defect > UNITARITY_TOL:
            raise InvalidCoinError(f"|a|² + |b|² = 1 violated by {defect:.3e} for a={self.a}, b={self.b}")

    @classmethod
    def from_transmission(cls, a: complex) -> LocalCoin:
        """Coin with the given transmission entry and b = sqrt(1 − |a|²) real nonnegative."""
        a = complex(a)
        modulus = abs(a)
        if modulus > 1.0 + UNITARITY_TOL:
            raise InvalidCoinError(f"Transmission parameter |a| = {modulus} exceeds 1")
        if modulus > 1.0:
            a = a / modulus
            modulus = 1.0
        return cls(a=a, b=complex(math.sqrt(max(0.0, 1.0 - modulus**2))))

    def matrix(self) -> NDArray[np.complex128]:
        return np.array(
            [[self.a, self.b], [-np.conj(self.b), np.conj(self.a)]], dtype=np.complex128
        )

    def theta_block(self) -> NDArray[np.complex128]:
        """The CMV block σ_x·C."""
        return np.array(
            [[-np.conj(self.b), np.conj(self.a)], [self.a, self.b]], dtype=np.complex128
        )

    def verblunsky(self) -> Tuple[complex, complex]:
        """(α, ρ) = (−b, a)."""
        return -self.b, self.a


IDENTITY_COIN = LocalCoin(a=1.0 + 0j, b=0j)
REFLECTOR_COIN = LocalCoin(a=0j, b=1.0 + 0j)
HADAMARD_COIN = LocalCoin.from_transmission(INV_SQRT2)


class CoinSequence(ABC):
    kind: CoinKind

    @abstractmethod
    def entries(self, sites: NDArray[np.int64]) -> CoinColumns:
        """Returns the columns a(n), b(n) for the given sites."""
        pass

    @abstractmethod
    def describe(self) -> dict:
        pass

    def coin_at(self, n: int) -> LocalCoin:
        a, b = self.entries(np.array([n], dtype=np.int64))
        return LocalCoin(a=complex(a[0]), b=complex(b[0]))

    def transmission_moduli(self, sites: NDArray[np.int64]) -> NDArray[np.float64]:
        a, _ = self.entries(np.asarray(sites, dtype=np.int64))
        return np.abs(a)

    def with_phases(self, phases: Mapping[int, float]) -> CoinSequence:
        return PhasedCoins(self, phases)


class HomogeneousCoins(CoinSequence):
    kind = CoinKind.HOMOGENEOUS

    def __init__(self, coin: LocalCoin) -> None:
        self.coin = coin

    def entries(self, sites: NDArray[np.int64]) -> CoinColumns:
        n = len(sites)
        return np.full(n, self.coin.a, dtype=np.complex128), np.full(n, self.coin.b, dtype=np.complex128)

    def describe(self) -> dict:
        return {"kind": str(self.kind), "a": [self.coin.a.real, self.coin.a.imag]}


class TableCoins(CoinSequence):
    """Explicit coins on finitely many sites, `default` elsewhere."""
    kind = CoinKind.TABLE

    def __init__(
        self,
        sites: NDArray[np.int64],
        a: NDArray[np.complex128],
        b: NDArray[np.complex128],
        default: LocalCoin = IDENTITY_COIN,
    ) -> None:
        sites = np.asarray(sites, dtype=np.int64)
        a = np.asarray(a, dtype=np.complex128)
        b = np.asarray(b, dtype=np.complex128)
        if not (sites.shape == a.shape == b.shape) or sites.ndim != 1:
            raise InvalidArgumentError("Coin table columns must be one-dimensional and of equal length.")
        order = np.argsort(sites)
        sites, a, b = sites[order], a[order], b[order]
        if len(sites) > 1 and np.any(np.diff(sites) == 0):
            raise InvalidArgumentError("Coin table lists a site twice.")
        defect = np.abs(np.abs(a) ** 2 + np.abs(b) ** 2 - 1.0)
        if len(defect) and float(defect.max()) > UNITARITY_TOL:
            worst = int(sites[int(np.argmax(defect))])
            raise InvalidCoinError(f"Coin table entry at site {worst} is not unitary (defect {defect.max():.3e})")
        self.sites, self.a, self.b = sites, a, b
        self.default = default

    @classmethod
    def from_coins(cls, coins: Mapping[int, LocalCoin], default: LocalCoin = IDENTITY_COIN) -> TableCoins:
        sites = np.array(sorted(coins), dtype=np.int64)
        a = np.array([coins[int(n)].a for n in sites], dtype=np.complex128)
        b = np.array([coins[int(n)].b for n in sites], dtype=np.complex128)
        return cls(sites, a, b, default)

    def entries(self, sites: NDArray[np.int64]) -> CoinColumns:
        sites = np.asarray(sites, dtype=np.int64)
        a = np.full(len(sites), self.default.a, dtype=np.complex128)
        b = np.full(len(sites), self.default.b, dtype=np.complex128)
        if len(self.sites) == 0:
            return a, b
        pos = np.minimum(np.searchsorted(self.sites, sites), len(self.sites) - 1)
        hit = self.sites[pos] == sites
        a[hit] = self.a[pos[hit]]
        b[hit] = self.b[pos[hit]]
        return a, b

    def describe(self) -> dict:
        return {
            "kind": str(self.kind),
            "n_entries": int(len(self.sites)),
            "default_a": [self.default.a.real, self.default.a.imag],
        }


@dataclass(frozen=True)
class DecayProfile:
    """m ↦ |a(j_m)| along a subsequence."""
    kind: DecayKind
    scale: float = 1.0
    power: float = 1.0

    def __call__(self, m: NDArray[np.int64], j: NDArray[np.int64]) -> NDArray[np.float64]:
        m = np.asarray(m, dtype=np.float64)
        j = np.asarray(j, dtype=np.float64)
        if self.kind == DecayKind.ZERO:
            return np.zeros_like(m)
        if self.kind == DecayKind.CONSTANT:
            return np.full_like(m, self.scale)
        if self.kind == DecayKind.INDEX_POWER:
            return self.scale / (1.0 + np.abs(m) ** self.power)
        if self.kind == DecayKind.SITE_POWER:
            return self.scale / (1.0 + np.abs(j) ** self.power)
        raise InvalidParameterError(f"Unknown decay profile: {self.kind}")


DecayFunction = Callable[[NDArray[np.int64], NDArray[np.int64]], NDArray[np.float64]]


@dataclass(frozen=True)
class SparseOverlaySpec:
    base: LocalCoin
    sites: SparseSubsequence
    decay: DecayFunction


class SparseOverlayCoins(CoinSequence):
    """`base` off the subsequence, |a(j_m)| = decay(m) with b ≥ 0 on it."""
    kind = CoinKind.SPARSE_OVERLAY

    def __init__(self, spec: SparseOverlaySpec) -> None:
        self.spec = spec
        self._sites = spec.sites
        self._lock = threading.Lock()
        self._decay_values(spec.sites.indices, spec.sites.sites)

    @property
    def subsequence(self) -> SparseSubsequence:
        return self._sites

    def _decay_values(self, m: NDArray[np.int64], j: NDArray[np.int64]) -> NDArray[np.float64]:
        values = np.asarray(self.spec.decay(m, j), dtype=np.float64)
        bad = (values < 0.0) | (values > 1.0) | ~np.isfinite(values)
        if np.any(bad):
            first = int(np.asarray(m)[np.argmax(bad)])
            raise InvalidCoinError(f"Decay value {values[np.argmax(bad)]} at m={first} is outside [0, 1]")
        return values

    def _covering(self, sites: NDArray[np.int64]) -> SparseSubsequence:
        lo, hi = int(sites.min()), int(sites.max())
        with self._lock:
            if not self._sites.covers(lo, hi):
                self._sites = self._sites.extended_to_cover(lo, hi)
            return self._sites

    def entries(self, sites: NDArray[np.int64]) -> CoinColumns:
        sites = np.asarray(sites, dtype=np.int64)
        a = np.full(len(sites), self.spec.base.a, dtype=np.complex128)
        b = np.full(len(sites), self.spec.base.b, dtype=np.complex128)
        if len(sites) == 0:
            return a, b
        seq = self._covering(sites)
        hit, m = seq.index_of_sites(sites)
        if np.any(hit):
            values = self._decay_values(m[hit], sites[hit])
            a[hit] = values
            b[hit] = np.sqrt(np.maximum(0.0, 1.0 - values**2))
        return a, b

    def describe(self) -> dict:
        decay = self.spec.decay
        return {
            "kind": str(self.kind),
            "base_a": [self.spec.base.a.real, self.spec.base.a.imag],
            "subsequence": str(self._sites.kind),
            "decay": str(decay.kind) if isinstance(decay, DecayProfile) else "custom",
        }


class RandomCoins(CoinSequence):
    """
    i.i.d. transmission entries drawn block by block. Block k of the lattice is
    sampled from its own generator seeded by (seed, stream, k), so values do not
    depend on the order in which sites are queried.
    """
    kind = CoinKind.RANDOM

    def __init__(
        self,
        sampler: Callable[[np.random.Generator, int], NDArray[np.float64]],
        seed: int,
        stream: int = 0,
        label: str = "random",
        block_size: int = RANDOM_BLOCK_SIZE,
    ) -> None:
        self._sampler = sampler
        self.seed = seed
        self.stream = stream
        self.label = label
        self._block_size = block_size
        self._blocks: Dict[int, NDArray[np.float64]] = {}
        self._lock = threading.Lock()

    def _block(self, k: int) -> NDArray[np.float64]:
        with self._lock:
            block = self._blocks.get(k)
            if block is None:
                rng = np.random.default_rng([self.seed, self.stream, zigzag(k)])
                block = np.asarray(self._sampler(rng, self._block_size), dtype=np.float64)
                self._blocks[k] = block
            return block

    def transmission(self, sites: NDArray[np.int64]) -> NDArray[np.float64]:
        sites = np.asarray(sites, dtype=np.int64)
        out = np.empty(len(sites), dtype=np.float64)
        if len(sites) == 0:
            return out
        blocks = sites // self._block_size
        for k in np.unique(blocks).tolist():
            mask = blocks == k
            out[mask] = self._block(k)[sites[mask] - k * self._block_size]
        return out

    def entries(self, sites: NDArray[np.int64]) -> CoinColumns:
        a = self.transmission(sites)
        b = np.sqrt(np.maximum(0.0, 1.0 - a**2))
        return a.astype(np.complex128), b.astype(np.complex128)

    def describe(self) -> dict:
        return {"kind": str(self.kind), "distribution": self.label, "seed": self.seed, "stream": self.stream}


@dataclass(frozen=True)
class DamanikSpec:
    eta: float
    barriers: Tuple[int, ...]

    def __post_init__(self) -> None:
        if not 0.0 < self.eta < 1.0:
            raise InvalidParameterError(f"eta must lie in (0, 1), got {self.eta}")
        if not self.barriers:
            raise InvalidArgumentError("At least one barrier site is required.")
        if self.barriers[0] < 1 or any(x >= y for x, y in zip(self.barriers, self.barriers[1:])):
            raise InvalidArgumentError("Barrier sites must be positive and strictly increasing.")

    @property
    def exponent(self) -> float:
        """(1 − η)/(2η)."""
        return (1.0 - self.eta) / (2.0 * self.eta)

    def transmission(self, barrier: int) -> float:
        """|a(L)| = L^{−(1−η)/(2η)}, evaluated in log space so huge barriers are fine."""
        return math.exp(-self.exponent * math.log(barrier))

    def growth_log(self) -> list[float]:
        """ln(L_{m+1}·|a(L_m)|) for consecutive barriers."""
        return [
            math.log(nxt) - self.exponent * math.log(cur)
            for cur, nxt in zip(self.barriers, self.barriers[1:])
        ]


def factorial_barriers(count: int) -> Tuple[int, ...]:
    """L_m = 2^{m!}, m = 1..count."""
    return tuple(2 ** math.factorial(m) for m in range(1, count + 1))


def tower_barriers(count: int) -> Tuple[int, ...]:
    """L_m = 2^{m^m}, m = 1..count."""
    return tuple(2 ** (m**m) for m in range(1, count + 1))


def barriers_for(kind: BarrierKind, count: int) -> Tuple[int, ...]:
    if kind == BarrierKind.FACTORIAL:
        return factorial_barriers(count)
    return tower_barriers(count)


class DamanikCoins(CoinSequence):
    """Half-line sparse barriers: identity coins except at the barrier sites."""
    kind = CoinKind.DAMANIK

    def __init__(self, spec: DamanikSpec) -> None:
        self.spec = spec
        reachable = [L for L in spec.barriers if L < 2**62]
        if len(reachable) < len(spec.barriers):
            logger.debug(f"{len(spec.barriers) - len(reachable)} barriers lie beyond the int64 lattice range")
        self._sites = np.array(reachable, dtype=np.int64)
        self._a = np.array([spec.transmission(L) for L in reachable], dtype=np.float64)

    @property
    def barrier_sites(self) -> NDArray[np.int64]:
        return self._sites

    def entries(self, sites: NDArray[np.int64]) -> CoinColumns:
        sites = np.asarray(sites, dtype=np.int64)
        a = np.ones(len(sites), dtype=np.complex128)
        b = np.zeros(len(sites), dtype=np.complex128)
        if len(self._sites) == 0 or len(sites) == 0:
            return a, b
        pos = np.minimum(np.searchsorted(self._sites, sites), len(self._sites) - 1)
        hit = self._sites[pos] == sites
        values = self._a[pos[hit]]
        a[hit] = values
        b[hit] = np.sqrt(np.maximum(0.0, 1.0 - values**2))
        return a, b

    def describe(self) -> dict:
        return {"kind": str(self.kind), "eta": self.spec.eta, "n_barriers": len(self.spec.barriers)}


class PhasedCoins(CoinSequence):
    """Multiplies a(n) by e^{iφ(n)} on selected sites; |a| is unchanged."""

    def __init__(self, inner: CoinSequence, phases: Mapping[int, float]) -> None:
        self.inner = inner
        self.kind = inner.kind
        self._sites = np.array(sorted(phases), dtype=np.int64)
        self._phases = np.exp(1j * np.array([phases[int(n)] for n in self._sites], dtype=np.float64))

    def entries(self, sites: NDArray[np.int64]) -> CoinColumns:
        sites = np.asarray(sites, dtype=np.int64)
        a, b = self.inner.entries(sites)
        if len(self._sites) == 0 or len(sites) == 0:
            return a, b
        pos = np.minimum(np.searchsorted(self._sites, sites), len(self._sites) - 1)
        hit = self._sites[pos] == sites
        a = a.copy()
        a[hit] *= self._phases[pos[hit]]
        return a, b

    def describe(self) -> dict:
        return {**self.inner.describe(), "phase_overrides": int(len(self._sites))}


def make_homogeneous(a: complex) -> HomogeneousCoins:
    return HomogeneousCoins(LocalCoin.from_transmission(a))


def make_sparse_overlay(spec: SparseOverlaySpec) -> SparseOverlayCoins:
    return SparseOverlayCoins(spec)


def make_damanik(spec: DamanikSpec) -> DamanikCoins:
    return DamanikCoins(spec)


def coin_at(seq: CoinSequence, n: int) -> LocalCoin:
    return seq.coin_at(n)


def verblunsky_pairs(c1: CoinSequence, c2: CoinSequence, n: int) -> dict[int, Tuple[complex, complex]]:
    """
    Verblunsky pairs (α, ρ) carried by site n: the even index 2n comes from C₁,
    the odd index 2n − 1 from C₂.
    """
    return {2 * n: c1.coin_at(n).verblunsky(), 2 * n - 1: c2.coin_at(n).verblunsky()}


def load_coin_table(path: Path, default: LocalCoin = IDENTITY_COIN) -> TableCoins:
    """Reads a CSV with columns `n, re_a, im_a, re_b, im_b`."""
    sites: list[int] = []
    a: list[complex] = []
    b: list[complex] = []
    try:
        with open(path, "r", newline="") as csvfile:
            reader = csv.DictReader(csvfile)
            for row in reader:
                sites.append(int(row["n"]))
                a.append(complex(float(row["re_a"]), float(row["im_a"])))
                b.append(complex(float(row["re_b"]), float(row["im_b"])))
    except FileNotFoundError as e:
        raise CoinTableError(f"Coin table not found: {path}", original_exception=e)
    except (KeyError, ValueError) as e:
        raise CoinTableError(f"Malformed coin table {path}: {e}", original_exception=e)
    try:
        return TableCoins(np.array(sites, dtype=np.int64), np.array(a), np.array(b), default)
    except (InvalidCoinError, InvalidArgumentError) as e:
        raise CoinTableError(f"Invalid coin table {path}: {e}", original_exception=e)


def write_coin_table(path: Path, table: TableCoins) -> None:
    with open(path, "w", newline="") as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=TABLE_COLUMNS)
        writer.writeheader()
        for n, a, b in zip(table.sites.tolist(), table.a.tolist(), table.b.tolist()):
            writer.writerow({"n": n, "re_a": repr(a.real), "im_a": repr(a.imag), "re_b": repr(b.real), "im_b": repr(b.imag)})


def random_unitary_table(
    rng: np.random.Generator,
    lo: int,
    hi: int,
    default: LocalCoin = HADAMARD_COIN,
) -> TableCoins:
    """Coins with uniformly random |a| and independent uniform phases on [lo, hi]."""
    sites = np.arange(lo, hi + 1, dtype=np.int64)
    modulus = rng.uniform(0.0, 1.0, size=len(sites))
    phase_a = rng.uniform(0.0, 2 * np.pi, size=len(sites))
    phase_b = rng.uniform(0.0, 2 * np.pi, size=len(sites))
    a = modulus * np.exp(1j * phase_a)
    b = np.sqrt(1.0 - modulus**2) * np.exp(1j * phase_b)
    return TableCoins(sites, a, b, default)


def decay_profile(kind: DecayKind, scale: float = 1.0, power: float = 1.0) -> DecayProfile:
    return DecayProfile(kind=kind, scale=scale, power=power)


def coins_summary(sequences: Sequence[Optional[CoinSequence]]) -> list[Optional[dict]]:
    return [seq.describe() if seq is not None else None for seq in sequences]
