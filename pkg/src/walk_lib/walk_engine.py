"""
One step of W = S₊C₁S₋C₂ on lattice states, the same step through the CMV
factorization W ≡ LM, and long-time evolution.

Shift convention: S₊ moves the + component from j to j+1, S₋ moves the −
component from j to j−1. Operators are applied right to left, C₂ first.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Iterable

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from walk_lib.coins import CoinSequence
from walk_lib.constants import NORM_DRIFT_PER_STEP, TRIM_EVERY_STEPS
from walk_lib.errors import InvalidArgumentError, InvalidParameterError
from walk_lib.lattice_state import CmvVector, WalkState


@dataclass(frozen=True)
class SplitStepWalk:
    c1: CoinSequence
    c2: CoinSequence

    def factors(self) -> CmvFactors:
        return CmvFactors(c1=self.c1, c2=self.c2)

    def coin_map(self) -> Dict[int, CoinSequence]:
        return {1: self.c1, 2: self.c2}


@dataclass(frozen=True)
class CmvFactors:
    """
    L is built from blocks Θ₁(n) = σ_x·C₁(n) acting on (2n, 2n+1), M from
    Θ₂(n) = σ_x·C₂(n) acting on (2n−1, 2n).
    """
    c1: CoinSequence
    c2: CoinSequence

    def l_blocks(self, sites: NDArray[np.int64]) -> NDArray[np.complex128]:
        return theta_blocks(self.c1, sites)

    def m_blocks(self, sites: NDArray[np.int64]) -> NDArray[np.complex128]:
        return theta_blocks(self.c2, sites)


def theta_blocks(coins: CoinSequence, sites: NDArray[np.int64]) -> NDArray[np.complex128]:
    """Stack of σ_x·C(n) = [[−conj b, conj a], [a, b]] with shape (len(sites), 2, 2)."""
    a, b = coins.entries(np.asarray(sites, dtype=np.int64))
    blocks = np.empty((len(a), 2, 2), dtype=np.complex128)
    blocks[:, 0, 0] = -np.conj(b)
    blocks[:, 0, 1] = np.conj(a)
    blocks[:, 1, 0] = a
    blocks[:, 1, 1] = b
    return blocks


def _coin_pass(
    plus: NDArray[np.complex128],
    minus: NDArray[np.complex128],
    a: NDArray[np.complex128],
    b: NDArray[np.complex128],
    a_conj: NDArray[np.complex128],
    b_conj: NDArray[np.complex128],
) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    return a * plus + b * minus, a_conj * minus - b_conj * plus


def _split_step_inplace(
    amps: NDArray[np.complex128],
    c2: tuple[NDArray, NDArray, NDArray, NDArray],
    c1: tuple[NDArray, NDArray, NDArray, NDArray],
) -> None:
    """
    One step on a window whose first and last rows are zero padding. Support
    grows by at most one site per side, so nothing is pushed out of the window.
    """
    plus, minus = _coin_pass(amps[:, 0], amps[:, 1], *c2)
    minus[:-1] = minus[1:]
    minus[-1] = 0.0
    plus, minus = _coin_pass(plus, minus, *c1)
    plus[1:] = plus[:-1]
    plus[0] = 0.0
    amps[:, 0] = plus
    amps[:, 1] = minus


def _coin_columns(coins: CoinSequence, sites: NDArray[np.int64]) -> tuple[NDArray, NDArray, NDArray, NDArray]:
    a, b = coins.entries(sites)
    return a, b, np.conj(a), np.conj(b)


def step_split(walk: SplitStepWalk, state: WalkState) -> WalkState:
    """W ψ with the window grown by one site on each side."""
    padded = state.extended(state.lo - 1, state.hi + 1)
    sites = padded.sites
    amps = padded.amps
    _split_step_inplace(amps, _coin_columns(walk.c2, sites), _coin_columns(walk.c1, sites))
    return padded


def step_cmv(factors: CmvFactors, seq: CmvVector) -> CmvVector:
    """L·M applied to a finitely supported CMV sequence."""
    aligned = seq.aligned()
    site_lo = (aligned.start + 1) // 2
    n_sites = len(aligned.values) // 2
    values = np.zeros(2 * (n_sites + 2), dtype=np.complex128)
    values[2:-2] = aligned.values
    start = 2 * (site_lo - 1) - 1

    m_sites = np.arange(site_lo - 1, site_lo + n_sites + 1, dtype=np.int64)
    pairs = values.reshape(-1, 2)
    pairs[:] = np.einsum("nij,nj->ni", factors.m_blocks(m_sites), pairs)

    l_sites = np.arange(site_lo - 1, site_lo + n_sites, dtype=np.int64)
    inner = values[1:-1].reshape(-1, 2)
    inner[:] = np.einsum("nij,nj->ni", factors.l_blocks(l_sites), inner)
    return CmvVector(start=start, values=values)


@dataclass
class EvolutionReport:
    state: WalkState
    t: int
    norm_drift: float
    steps_trimmed: int = 0


class _WindowedKernel:
    """
    Evolves one state inside a buffer sized for the reachable range. The active
    window grows one site per side per step and is trimmed to its nonzero
    support every TRIM_EVERY_STEPS steps.
    """

    def __init__(self, walk: SplitStepWalk, state: WalkState, max_steps: int) -> None:
        self._base = state.lo - max_steps - 1
        top = state.hi + max_steps + 1
        sites = np.arange(self._base, top + 1, dtype=np.int64)
        self._c1 = _coin_columns(walk.c1, sites)
        self._c2 = _coin_columns(walk.c2, sites)
        self._buf = np.zeros((len(sites), 2), dtype=np.complex128)
        self._lo = state.lo - self._base
        self._hi = state.hi - self._base
        self._buf[self._lo: self._hi + 1] = state.amps
        self._budget = max_steps
        self.t = 0
        self.trims = 0

    def step(self) -> None:
        if self.t >= self._budget:
            raise InvalidArgumentError("Kernel step budget exhausted.")
        lo, hi = self._lo - 1, self._hi + 2
        _split_step_inplace(
            self._buf[lo:hi],
            tuple(col[lo:hi] for col in self._c2),
            tuple(col[lo:hi] for col in self._c1),
        )
        self._lo -= 1
        self._hi += 1
        self.t += 1
        if self.t % TRIM_EVERY_STEPS == 0:
            self._trim()

    def _trim(self) -> None:
        window = self._buf[self._lo: self._hi + 1]
        nonzero = np.flatnonzero(np.any(window != 0, axis=1))
        if len(nonzero) == 0:
            return
        new_lo, new_hi = self._lo + int(nonzero[0]), self._lo + int(nonzero[-1])
        if (new_lo, new_hi) != (self._lo, self._hi):
            self.trims += 1
            logger.trace(
                f"t={self.t}: trimmed window to [{new_lo + self._base}, {new_hi + self._base}]"
            )
        self._lo, self._hi = new_lo, new_hi

    def snapshot(self) -> WalkState:
        return WalkState(lo=self._lo + self._base, amps=self._buf[self._lo: self._hi + 1].copy())


def evolve_with_report(walk: SplitStepWalk, state: WalkState, t: int) -> EvolutionReport:
    """W^t ψ together with the observed norm drift."""
    if t < 0:
        raise InvalidParameterError(f"Step count must be ≥ 0, got {t}")
    initial_norm = state.norm()
    if t == 0:
        return EvolutionReport(state=state.copy(), t=0, norm_drift=0.0)
    kernel = _WindowedKernel(walk, state, t)
    for _ in range(t):
        kernel.step()
    result = kernel.snapshot()
    drift = abs(result.norm() - initial_norm)
    if drift > t * NORM_DRIFT_PER_STEP:
        logger.warning(f"Norm drift {drift:.3e} after {t} steps exceeds {t * NORM_DRIFT_PER_STEP:.1e}")
    return EvolutionReport(state=result, t=t, norm_drift=drift, steps_trimmed=kernel.trims)


def evolve(walk: SplitStepWalk, state: WalkState, t: int) -> WalkState:
    return evolve_with_report(walk, state, t).state


def evolve_trajectory(walk: SplitStepWalk, state: WalkState, times: Iterable[int]) -> Dict[int, WalkState]:
    """Snapshots W^t ψ for every requested t from a single sweep."""
    wanted = sorted(set(int(t) for t in times))
    if not wanted:
        return {}
    if wanted[0] < 0:
        raise InvalidParameterError(f"Step counts must be ≥ 0, got {wanted[0]}")
    snapshots: Dict[int, WalkState] = {}
    if wanted[-1] == 0:
        return {0: state.copy()}
    kernel = _WindowedKernel(walk, state, wanted[-1])
    for t in wanted:
        while kernel.t < t:
            kernel.step()
        snapshots[t] = kernel.snapshot()
    return snapshots


StepFunction = Callable[[SplitStepWalk, WalkState], WalkState]
