"""Position distributions, moments, finite-time velocity proxies and Chebyshev tails."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from walk_lib.constants import (
    CHEBYSHEV_PROBE_VELOCITY,
    DISTRIBUTION_SUM_TOL,
    INV_SQRT2,
    NORMALIZATION_TOL,
    PACKET_THETAS,
    PACKET_WIDTH,
    SPEED_LIMIT_SLACK,
)
from walk_lib.enums import FamilyKind, Spin
from walk_lib.errors import InvalidArgumentError
from walk_lib.helpers import tail_quartile
from walk_lib.lattice_state import WalkState
from walk_lib.walk_engine import SplitStepWalk, evolve, evolve_trajectory


@dataclass(frozen=True, eq=False)
class PositionDistribution:
    t: int
    lo: int
    mass: NDArray[np.float64]

    @property
    def sites(self) -> NDArray[np.int64]:
        return np.arange(self.lo, self.lo + len(self.mass), dtype=np.int64)

    def total(self) -> float:
        return float(self.mass.sum())

    def at(self, j: int) -> float:
        k = j - self.lo
        if k < 0 or k >= len(self.mass):
            return 0.0
        return float(self.mass[k])

    def rows(self) -> List[dict]:
        return [{"t": self.t, "j": j, "p": repr(p)} for j, p in zip(self.sites.tolist(), self.mass.tolist())]


@dataclass(frozen=True, eq=False)
class FamilyMember:
    psi_id: str
    state: WalkState


@dataclass
class VelocitySample:
    t: int
    psi_id: str
    vhat: float
    second_moment: float
    tail_p_at_v: float

    def row(self) -> dict:
        return {
            "t": self.t,
            "psi_id": self.psi_id,
            "vhat": repr(self.vhat),
            "second_moment": repr(self.second_moment),
            "tail_p_at_v": repr(self.tail_p_at_v),
        }


@dataclass
class VelocityEstimate:
    """
    v̂_ψ(t) = ‖Q W^t ψ‖/t over a finite family and time grid. `proxy` is the
    maximum over the family and over the last quartile of the grid; it is a
    lower estimate of the supremum over all states.
    """
    samples: List[VelocitySample]
    proxy: float
    tail_times: List[int]
    family: str
    probe_velocity: float
    per_state_proxy: Dict[str, float] = field(default_factory=dict)
    tail_nonincreasing: Dict[str, bool] = field(default_factory=dict)
    speed_limit_ok: bool = True

    def summary(self) -> dict:
        return {
            "proxy": self.proxy,
            "estimator": "max over family and last quartile of t_grid",
            "bound_direction": "lower",
            "tail_times": self.tail_times,
            "family": self.family,
            "probe_velocity": self.probe_velocity,
            "per_state_proxy": self.per_state_proxy,
            "tail_nonincreasing": self.tail_nonincreasing,
            "speed_limit_ok": self.speed_limit_ok,
        }


def distribution(state: WalkState, t: int) -> PositionDistribution:
    """p(j) = |ψ⁺(j)|² + |ψ⁻(j)|² of an already evolved state."""
    mass = np.sum(np.abs(state.amps) ** 2, axis=1)
    total = float(mass.sum())
    if abs(total - 1.0) > DISTRIBUTION_SUM_TOL:
        logger.warning(f"Distribution at t={t} sums to {total!r}")
    return PositionDistribution(t=t, lo=state.lo, mass=mass)


def distribution_at(walk: SplitStepWalk, psi: WalkState, t: int) -> PositionDistribution:
    return distribution(evolve(walk, psi, t), t)


def second_moment(dist: PositionDistribution) -> float:
    j = dist.sites.astype(np.float64)
    return float(np.sum(j * j * dist.mass))


def tail_probability(dist: PositionDistribution, v: float) -> float:
    """ℙ(|𝒥| ≥ v·t) on the computed masses."""
    if not v > 0.0:
        raise InvalidArgumentError(f"Tail velocity must be positive, got {v}")
    threshold = v * dist.t
    mask = np.abs(dist.sites) >= threshold
    return float(dist.mass[mask].sum())


def chebyshev_holds(dist: PositionDistribution, v: float) -> bool:
    """tail_probability(v) ≤ E[𝒥²]/(v·t)² up to summation rounding."""
    if dist.t == 0:
        return True
    tail = tail_probability(dist, v)
    bound = second_moment(dist) / (v * dist.t) ** 2
    return tail <= bound * (1.0 + 1e-12) + 1e-300


def delta_family() -> List[FamilyMember]:
    mixed = WalkState(lo=0, amps=np.array([[INV_SQRT2, 1j * INV_SQRT2]], dtype=np.complex128))
    return [
        FamilyMember("delta0+", WalkState.delta(0, Spin.PLUS)),
        FamilyMember("delta0-", WalkState.delta(0, Spin.MINUS)),
        FamilyMember("mixed0", mixed),
    ]


def boosted_packet(theta: float, width: int = PACKET_WIDTH) -> WalkState:
    """Spin-up packet e^{iθj}/√width on the sites −width/2, ..., width/2 − 1."""
    if width < 1:
        raise InvalidArgumentError(f"Packet width must be ≥ 1, got {width}")
    lo = -(width // 2)
    sites = np.arange(lo, lo + width)
    plus = np.exp(1j * theta * sites) / math.sqrt(width)
    return WalkState.from_components(lo, plus, np.zeros(width))


def packet_family(thetas: Sequence[float] = PACKET_THETAS, width: int = PACKET_WIDTH) -> List[FamilyMember]:
    return [FamilyMember(f"packet{theta:.4f}", boosted_packet(theta, width)) for theta in thetas]


def default_family(thetas: Sequence[float] = PACKET_THETAS, width: int = PACKET_WIDTH) -> List[FamilyMember]:
    return delta_family() + packet_family(thetas, width)


def build_family(
    kind: FamilyKind,
    thetas: Sequence[float] = PACKET_THETAS,
    width: int = PACKET_WIDTH,
) -> List[FamilyMember]:
    if kind == FamilyKind.DELTA:
        return delta_family()
    if kind == FamilyKind.PACKETS:
        return packet_family(thetas, width)
    return default_family(thetas, width)


def _initial_radius(state: WalkState) -> int:
    support = state.support()
    if support is None:
        return 0
    return max(abs(support[0]), abs(support[1]))


def _member_samples(
    walk: SplitStepWalk,
    member: FamilyMember,
    t_grid: Sequence[int],
    probe_velocity: float,
) -> tuple[List[VelocitySample], bool]:
    radius = _initial_radius(member.state)
    samples: List[VelocitySample] = []
    within_limit = True
    for t, state in sorted(evolve_trajectory(walk, member.state, t_grid).items()):
        dist = distribution(state, t)
        m2 = second_moment(dist)
        vhat = math.sqrt(m2) / t
        if vhat > (t + radius) / t + SPEED_LIMIT_SLACK:
            within_limit = False
        samples.append(VelocitySample(t, member.psi_id, vhat, m2, tail_probability(dist, probe_velocity)))
    logger.debug(f"Evolved family member {member.psi_id} up to t={t_grid[-1]}")
    return samples, within_limit


def velocity_proxy(
    walk: SplitStepWalk,
    family: Sequence[FamilyMember],
    t_grid: Sequence[int],
    threads: int = 1,
    probe_velocity: float = CHEBYSHEV_PROBE_VELOCITY,
    family_label: Optional[str] = None,
) -> VelocityEstimate:
    if not family:
        raise InvalidArgumentError("The initial-state family is empty.")
    grid = sorted(set(int(t) for t in t_grid))
    if not grid or grid[0] < 1:
        raise InvalidArgumentError("The time grid must be a non-empty list of positive step counts.")
    ids = [member.psi_id for member in family]
    duplicates = sorted({psi_id for psi_id in ids if ids.count(psi_id) > 1})
    if duplicates:
        raise InvalidArgumentError(f"Family members must have distinct ids, repeated: {duplicates}")
    for member in family:
        if abs(member.state.norm() - 1.0) > NORMALIZATION_TOL:
            raise InvalidArgumentError(f"Family member {member.psi_id} is not normalized.")

    results: Dict[str, List[VelocitySample]] = {}
    speed_ok = True
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        futures = {
            executor.submit(_member_samples, walk, member, grid, probe_velocity): member.psi_id
            for member in family
        }
        for future in as_completed(futures):
            samples, within_limit = future.result()
            results[futures[future]] = samples
            speed_ok = speed_ok and within_limit

    tail_times = [int(t) for t in tail_quartile(np.array(grid))]
    ordered: List[VelocitySample] = []
    per_state: Dict[str, float] = {}
    trend: Dict[str, bool] = {}
    for member in family:
        samples = results[member.psi_id]
        ordered.extend(samples)
        tail = [s.vhat for s in samples if s.t in tail_times]
        per_state[member.psi_id] = max(tail)
        trend[member.psi_id] = all(b <= a for a, b in zip(tail, tail[1:]))
    if not speed_ok:
        logger.warning("A velocity sample exceeded the speed limit of the walk")
    return VelocityEstimate(
        samples=ordered,
        proxy=max(per_state.values()),
        tail_times=tail_times,
        family=family_label or ",".join(m.psi_id for m in family),
        probe_velocity=probe_velocity,
        per_state_proxy=per_state,
        tail_nonincreasing=trend,
        speed_limit_ok=speed_ok,
    )
