import math

import numpy as np
import pytest

from walk_lib.coins import HADAMARD_COIN, IDENTITY_COIN, REFLECTOR_COIN, HomogeneousCoins, make_homogeneous
from walk_lib.constants import INV_SQRT2
from walk_lib.enums import FamilyKind, Spin
from walk_lib.errors import InvalidArgumentError
from walk_lib.lattice_state import WalkState
from walk_lib.observables import (
    FamilyMember,
    boosted_packet,
    build_family,
    chebyshev_holds,
    default_family,
    delta_family,
    distribution,
    distribution_at,
    second_moment,
    tail_probability,
    velocity_proxy,
)
from walk_lib.walk_engine import SplitStepWalk


def _walk(coin) -> SplitStepWalk:
    coins = HomogeneousCoins(coin)
    return SplitStepWalk(coins, coins)


def test_families():
    deltas = delta_family()
    assert [m.psi_id for m in deltas] == ["delta0+", "delta0-", "mixed0"]
    packets = build_family(FamilyKind.PACKETS, thetas=[0.0, math.pi], width=8)
    assert [m.psi_id for m in packets] == ["packet0.0000", "packet3.1416"]
    assert len(default_family()) == 3 + 5
    for member in default_family():
        assert member.state.norm() == pytest.approx(1.0)
    assert build_family(FamilyKind.DELTA)[0].psi_id == "delta0+"


def test_boosted_packet_support():
    packet = boosted_packet(0.5, width=6)
    assert packet.support() == (-3, 2)
    assert packet.amplitude(0, Spin.MINUS) == 0.0
    with pytest.raises(InvalidArgumentError):
        boosted_packet(0.0, width=0)


def test_distribution_sums_to_one():
    dist = distribution_at(_walk(HADAMARD_COIN), WalkState.delta(0, Spin.PLUS), 40)
    assert dist.total() == pytest.approx(1.0, abs=1e-12)
    assert dist.at(1000) == 0.0
    rows = dist.rows()
    assert rows[0]["t"] == 40
    assert {"t", "j", "p"} == set(rows[0])


def test_moments_and_tail_of_a_point_mass():
    state = WalkState.delta(5, Spin.PLUS)
    dist = distribution(state, 10)
    assert second_moment(dist) == 25.0
    assert tail_probability(dist, 0.5) == 1.0
    assert tail_probability(dist, 0.6) == 0.0
    assert chebyshev_holds(dist, 0.5)
    with pytest.raises(InvalidArgumentError):
        tail_probability(dist, 0.0)


def test_chebyshev_on_evolved_distribution():
    dist = distribution_at(_walk(HADAMARD_COIN), WalkState.delta(0, Spin.MINUS), 100)
    for v in (0.05, 0.2, 0.5, 0.9):
        assert chebyshev_holds(dist, v)


def test_free_walk_moves_at_unit_speed():
    estimate = velocity_proxy(_walk(IDENTITY_COIN), delta_family(), [10, 20, 30, 40])
    assert estimate.tail_times == [40]
    assert estimate.proxy == pytest.approx(1.0)
    assert estimate.per_state_proxy["delta0+"] == pytest.approx(1.0)
    assert estimate.speed_limit_ok
    assert len(estimate.samples) == 3 * 4


@pytest.mark.parametrize("a", [0.3, INV_SQRT2, 0.95])
def test_homogeneous_walk_stays_below_transmission(a: float) -> None:
    coins = make_homogeneous(a)
    estimate = velocity_proxy(SplitStepWalk(coins, coins), default_family(), [1000, 1250, 1500, 1750, 2000], threads=2)
    assert max(s.vhat for s in estimate.samples) <= a + 5e-3
    packets = [v for psi_id, v in estimate.per_state_proxy.items() if psi_id.startswith("packet")]
    assert max(packets) >= 0.9 * a
    summary = estimate.summary()
    assert summary["proxy"] == estimate.proxy
    assert set(summary["per_state_proxy"]) == {m.psi_id for m in default_family()}


def test_hadamard_delta_velocity():
    family = [FamilyMember("delta0+", WalkState.delta(0, Spin.PLUS))]
    estimate = velocity_proxy(_walk(HADAMARD_COIN), family, [1000])
    # ballistic limit sqrt(1 − 1/√2) ≈ 0.541
    assert 0.40 <= estimate.proxy <= 0.71


def test_perfect_reflectors_everywhere_freeze_the_walk():
    reflector = HomogeneousCoins(REFLECTOR_COIN)
    estimate = velocity_proxy(SplitStepWalk(reflector, reflector), delta_family(), [100, 500, 1000])
    assert max(s.vhat * s.t for s in estimate.samples) <= 1.0 + 1e-12


def test_velocity_proxy_rejects_bad_input():
    walk = _walk(HADAMARD_COIN)
    with pytest.raises(InvalidArgumentError):
        velocity_proxy(walk, [], [10])
    with pytest.raises(InvalidArgumentError):
        velocity_proxy(walk, delta_family(), [])
    with pytest.raises(InvalidArgumentError):
        velocity_proxy(walk, delta_family(), [0, 10])
    unnormalized = FamilyMember("big", WalkState(lo=0, amps=np.array([[2.0, 0.0]], dtype=np.complex128)))
    with pytest.raises(InvalidArgumentError):
        velocity_proxy(walk, [unnormalized], [10])


def test_velocity_proxy_rejects_repeated_ids():
    walk = _walk(HADAMARD_COIN)
    family = [
        FamilyMember("same", WalkState.delta(0, Spin.PLUS)),
        FamilyMember("same", WalkState.delta(0, Spin.MINUS)),
    ]
    with pytest.raises(InvalidArgumentError, match="same"):
        velocity_proxy(walk, family, [10])
