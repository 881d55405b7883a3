import numpy as np
import pytest

from walk_lib.coins import (
    HADAMARD_COIN,
    IDENTITY_COIN,
    REFLECTOR_COIN,
    HomogeneousCoins,
    TableCoins,
    make_homogeneous,
    random_unitary_table,
)
from walk_lib.enums import Spin
from walk_lib.errors import InvalidParameterError
from walk_lib.lattice_state import WalkState, from_cmv, to_cmv
from walk_lib.walk_engine import (
    SplitStepWalk,
    evolve,
    evolve_trajectory,
    evolve_with_report,
    step_cmv,
    step_split,
    theta_blocks,
)


def _random_walk(seed: int, radius: int) -> SplitStepWalk:
    rng = np.random.default_rng(seed)
    return SplitStepWalk(random_unitary_table(rng, -radius, radius), random_unitary_table(rng, -radius, radius))


def _random_state(seed: int, lo: int, hi: int) -> WalkState:
    rng = np.random.default_rng(seed)
    n = hi - lo + 1
    return WalkState(lo=lo, amps=rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))).normalized()


def _on_window(state: WalkState, lo: int, hi: int) -> np.ndarray:
    return state.trimmed().extended(lo, hi).amps if state.support() else np.zeros((hi - lo + 1, 2))


def test_trivial_coins_move_spins_apart():
    identity = HomogeneousCoins(IDENTITY_COIN)
    walk = SplitStepWalk(identity, identity)
    right = step_split(walk, WalkState.delta(0, Spin.PLUS))
    assert right.support() == (1, 1)
    assert right.amplitude(1, Spin.PLUS) == 1.0
    left = step_split(walk, WalkState.delta(0, Spin.MINUS))
    assert left.support() == (-1, -1)
    assert left.amplitude(-1, Spin.MINUS) == 1.0


def test_reflector_in_second_coin_sends_plus_back():
    walk = SplitStepWalk(HomogeneousCoins(IDENTITY_COIN), TableCoins.from_coins({3: REFLECTOR_COIN}))
    out = step_split(walk, WalkState.delta(3, Spin.PLUS))
    assert out.support() == (2, 2)
    assert out.amplitude(2, Spin.MINUS) == -1.0


def test_split_step_matches_cmv_product():
    walk = _random_walk(7, 40)
    factors = walk.factors()
    state = _random_state(8, -3, 3)
    for _ in range(25):
        split = step_split(walk, state)
        cmv = from_cmv(step_cmv(factors, to_cmv(state)))
        lo, hi = min(split.lo, cmv.lo), max(split.hi, cmv.hi)
        np.testing.assert_allclose(split.extended(lo, hi).amps, cmv.extended(lo, hi).amps, atol=1e-13)
        state = split


def test_theta_blocks_are_swapped_coins():
    coins = make_homogeneous(0.3 + 0.1j)
    blocks = theta_blocks(coins, np.array([0, 1]))
    assert blocks.shape == (2, 2, 2)
    np.testing.assert_allclose(blocks[0], coins.coin_at(0).theta_block())


def test_step_preserves_norm_and_grows_support_by_one():
    walk = _random_walk(1, 30)
    state = _random_state(2, -2, 2)
    out = step_split(walk, state)
    assert out.norm() == pytest.approx(1.0, abs=1e-13)
    lo, hi = out.support()
    assert lo >= -3 and hi <= 3


def test_evolve_matches_repeated_steps():
    walk = _random_walk(3, 80)
    state = _random_state(4, -2, 2)
    stepped = state
    for _ in range(70):
        stepped = step_split(walk, stepped)
    evolved = evolve(walk, state, 70)
    lo, hi = -80, 80
    np.testing.assert_allclose(_on_window(evolved, lo, hi), _on_window(stepped, lo, hi), atol=1e-12)


def test_evolve_trajectory_snapshots():
    coins = HomogeneousCoins(HADAMARD_COIN)
    walk = SplitStepWalk(coins, coins)
    psi = WalkState.delta(0, Spin.PLUS)
    snapshots = evolve_trajectory(walk, psi, [10, 0, 5, 10])
    assert sorted(snapshots) == [0, 5, 10]
    assert snapshots[0].support() == (0, 0)
    for t in (5, 10):
        assert snapshots[t].norm() == pytest.approx(1.0, abs=1e-13)
        lo, hi = snapshots[t].support()
        assert -t <= lo and hi <= t
    assert evolve_trajectory(walk, psi, []) == {}


def test_evolution_report_and_invalid_times():
    walk = _random_walk(5, 20)
    report = evolve_with_report(walk, WalkState.delta(0, Spin.MINUS), 15)
    assert report.t == 15
    assert report.norm_drift <= 1e-12
    assert evolve_with_report(walk, WalkState.delta(0, Spin.MINUS), 0).norm_drift == 0.0
    with pytest.raises(InvalidParameterError):
        evolve(walk, WalkState.delta(0, Spin.PLUS), -1)
    with pytest.raises(InvalidParameterError):
        evolve_trajectory(walk, WalkState.delta(0, Spin.PLUS), [-2, 3])


def test_hadamard_two_steps_from_plus_at_origin():
    coins = HomogeneousCoins(HADAMARD_COIN)
    out = evolve(SplitStepWalk(coins, coins), WalkState.delta(0, Spin.PLUS), 2)
    expected = {
        -2: (0.0, -0.25),
        -1: (-0.25, 0.25),
        0: (-0.25, 0.25),
        1: (-0.75, -0.25),
        2: (0.25, 0.0),
    }
    assert out.support() == (-2, 2)
    for site, (plus, minus) in expected.items():
        assert out.amplitude(site, Spin.PLUS) == pytest.approx(plus, abs=1e-14)
        assert out.amplitude(site, Spin.MINUS) == pytest.approx(minus, abs=1e-14)


def test_split_step_matches_cmv_over_long_runs():
    for seed in (11, 12):
        walk = _random_walk(seed, 1010)
        factors = walk.factors()
        state = _random_state(seed + 100, -4, 4)
        worst = 0.0
        for _ in range(1000):
            split = step_split(walk, state)
            cmv = from_cmv(step_cmv(factors, to_cmv(state)))
            lo, hi = min(split.lo, cmv.lo), max(split.hi, cmv.hi)
            worst = max(worst, float(np.abs(split.extended(lo, hi).amps - cmv.extended(lo, hi).amps).max()))
            state = split
        assert worst <= 1e-12
        assert abs(state.norm() - 1.0) <= 1e-10
