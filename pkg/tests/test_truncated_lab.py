from pathlib import Path

import numpy as np
import pytest

from walk_lib.bounds import ModifiedPosition, commutator_norm_formula
from walk_lib.coins import HADAMARD_COIN, HomogeneousCoins, random_unitary_table
from walk_lib.enums import BoundaryCompletion, ModifiedPositionKind, Spin
from walk_lib.errors import AlignmentError, InvalidArgumentError
from walk_lib.lattice_state import WalkState
from walk_lib.observables import delta_family
from walk_lib.subsequence import SparseSubsequence
from walk_lib.truncated_lab import (
    block_deviation_bounds,
    build_truncated,
    cmv_ordering_check,
    cmv_window,
    compare_commutator,
    cyclic_shift,
    dense_commutator,
    embed_state,
    extract_state,
    modified_position_matrix,
    operator_norm,
    position_diagonal,
    q_bound_witness,
    velocity_symmetry_check,
    write_matrix_csv,
)
from walk_lib.walk_engine import SplitStepWalk, step_split


def _random_walk(seed: int, radius: int) -> SplitStepWalk:
    rng = np.random.default_rng(seed)
    return SplitStepWalk(random_unitary_table(rng, -radius, radius), random_unitary_table(rng, -radius, radius))


def test_cmv_window_alignment():
    assert cmv_window(-3, 4) == (-7, 8)
    assert position_diagonal((-3, 4)).tolist() == [-1, -1, 0, 0, 1, 1, 2, 2]
    with pytest.raises(AlignmentError):
        cmv_window(2, 1)
    walk = _random_walk(0, 10)
    with pytest.raises(AlignmentError):
        build_truncated(walk.factors(), (-6, 8))
    with pytest.raises(AlignmentError):
        build_truncated(walk.factors(), (-7, 7))


@pytest.mark.parametrize("boundary", list(BoundaryCompletion))
def test_truncated_factors_are_unitary(boundary):
    walk = _random_walk(1, 30)
    factors = build_truncated(walk.factors(), cmv_window(-20, 19), boundary)
    for op in (factors.L, factors.M, factors.W):
        assert op.unitarity_defect() <= 1e-12
        assert op.site_window == (-20, 19)
    np.testing.assert_allclose(factors.W.matrix, factors.L.matrix @ factors.M.matrix)


def test_truncated_w_reproduces_the_engine():
    walk = _random_walk(2, 30)
    window = cmv_window(-25, 25)
    W = build_truncated(walk.factors(), window).W.matrix
    state = WalkState.delta(0, Spin.PLUS)
    x = embed_state(state, window)
    for _ in range(20):
        x = W @ x
        state = step_split(walk, state)
    np.testing.assert_allclose(x, embed_state(state, window), atol=1e-12)
    back = extract_state(x, window)
    assert back.lo == -25
    np.testing.assert_allclose(back.amplitude(3, Spin.MINUS), state.amplitude(3, Spin.MINUS), atol=1e-12)


def test_embed_state_outside_window():
    with pytest.raises(InvalidArgumentError):
        embed_state(WalkState.delta(10, Spin.PLUS), cmv_window(-3, 3))


def test_dense_commutator_matches_formula():
    rng = np.random.default_rng(4)
    seq = SparseSubsequence.explicit([-60, -51, -44, -40, -33, -25, -18, -12, -7, -3, 0, 4, 9, 13, 20, 26, 31, 39, 46, 52, 61])
    walk = SplitStepWalk(random_unitary_table(rng, -61, 61), random_unitary_table(rng, -61, 61))
    site_window = (-32, 31)
    factors = build_truncated(walk.factors(), cmv_window(*site_window))
    for kind, N in [(ModifiedPositionKind.TILDE, 0), (ModifiedPositionKind.TILDE, 2), (ModifiedPositionKind.HAT, 1)]:
        formula = commutator_norm_formula(seq, walk.c2, kind, N, site_window)
        comparison = compare_commutator(seq, factors, kind, N, formula)
        assert comparison.difference <= 1e-10
        assert comparison.off_diagonal <= 1e-12
        assert comparison.interfaces == 12


def test_block_scalar_operators_commute_with_l():
    seq = SparseSubsequence.arithmetic(3, 30)
    walk = _random_walk(5, 40)
    window = cmv_window(-20, 20)
    factors = build_truncated(walk.factors(), window)
    d = modified_position_matrix(ModifiedPosition(ModifiedPositionKind.TILDE, 1, seq), window)
    assert operator_norm(dense_commutator(d, factors.L.matrix)) <= 1e-12


def test_operator_norm_and_shapes():
    assert operator_norm(np.diag([1.0, -3.0, 2.0])) == pytest.approx(3.0)
    assert operator_norm(np.zeros((0, 0))) == 0.0
    with pytest.raises(InvalidArgumentError):
        dense_commutator(np.eye(2), np.eye(3))


def test_cyclic_shift():
    T = cyclic_shift(4)
    np.testing.assert_array_equal(T @ np.array([1, 0, 0, 0]), [0, 1, 0, 0])
    np.testing.assert_array_equal(T @ np.array([0, 0, 0, 1]), [1, 0, 0, 0])


def test_ordering_check_for_the_free_walk_pair():
    coins = HomogeneousCoins(HADAMARD_COIN)
    window = cmv_window(-40, 40)
    factors = build_truncated(SplitStepWalk(coins, coins).factors(), window, BoundaryCompletion.PERIODIC)
    family = [embed_state(m.state, window) for m in delta_family()]
    report = cmv_ordering_check(factors, [5, 10, 15, 20], family)
    assert set(report.proxies) == {"LM", "ML", "TinvMLT"}
    assert report.max_discrepancy >= 0.0
    for value in report.proxies.values():
        assert 0.0 < value <= 2.0

    same = velocity_symmetry_check(factors.W.matrix, np.eye(factors.W.dim), [5, 10], family, window)
    assert same.max_discrepancy == pytest.approx(0.0, abs=1e-12)
    assert same.passed


def test_q_bound_witness_on_reference_subsequences():
    window = cmv_window(-64, 63)
    rng = np.random.default_rng(11)
    arithmetic = q_bound_witness(SparseSubsequence.arithmetic(5, 64), 2, window, rng)
    assert arithmetic.c_N == 0.0
    assert arithmetic.holds
    # blocks −13..12, none within 0.05·|x| of Q̃_2; worst endpoint is j_{m+1} − j_{m−2}
    assert (arithmetic.good_blocks, arithmetic.bad_blocks) == (0, 26)
    assert arithmetic.m_const == 15.0
    geometric = q_bound_witness(SparseSubsequence.geometric(2, 40), 2, window, rng)
    assert geometric.c_N == pytest.approx(1.0 - 2.0**-3)
    assert geometric.holds
    # blocks −7..5, bad only for |m| ≤ 2; block 2 runs from 4 to 8 with Q̃_2 = 0 there
    assert (geometric.good_blocks, geometric.bad_blocks) == (8, 5)
    assert geometric.m_const == 8.0


def test_q_bound_witness_fails_with_undersized_constant():
    window = cmv_window(-64, 63)
    witness = q_bound_witness(SparseSubsequence.arithmetic(5, 64), 2, window, np.random.default_rng(3), m_const=0.0)
    assert witness.m_const == 0.0
    assert witness.max_violation > 0.5
    assert not witness.holds


def test_block_deviation_bounds_on_explicit_blocks():
    seq = SparseSubsequence.explicit([-8, -4, -2, 0, 2, 4, 8, 10])
    op = ModifiedPosition(ModifiedPositionKind.TILDE, 1, seq)
    # block 2 = [4, 8] against j_1 = 2 and block 3 = [8, 10] against j_2 = 4
    m_const, good, bad = block_deviation_bounds(op, [2, 3], 0.7)
    assert (good, bad) == (1, 1)
    assert m_const == 6.0
    with pytest.raises(InvalidArgumentError):
        block_deviation_bounds(op, [4], 0.7)


def test_write_matrix_csv(tmp_path: Path) -> None:
    walk = _random_walk(6, 10)
    factors = build_truncated(walk.factors(), cmv_window(-3, 3))
    path = tmp_path / "matrix_M.csv"
    count = write_matrix_csv(path, factors.M)
    lines = path.read_text(encoding="utf-8").strip().splitlines()
    assert lines[0] == "row,col,re,im"
    assert len(lines) == count + 1
    # seven 2x2 M blocks with nonzero entries
    assert count == 7 * 4
    first = lines[1].split(",")
    assert int(first[0]) >= -7 and int(first[1]) >= -7
