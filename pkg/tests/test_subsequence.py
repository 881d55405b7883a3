import numpy as np
import pytest

from walk_lib.enums import SubsequenceKind
from walk_lib.errors import InvalidArgumentError, InvalidParameterError
from walk_lib.subsequence import SparseSubsequence


def test_arithmetic_sites_and_gaps():
    seq = SparseSubsequence.arithmetic(5, 10)
    assert seq.kind == SubsequenceKind.ARITHMETIC
    assert seq.structural_q == 0.0
    assert (seq.m_min, seq.m_max) == (-10, 10)
    assert seq.j(0) == 0
    assert seq.j(3) == 15
    assert seq.j(-2) == -10
    assert seq.gap(0) == 5
    assert seq.gap(-1) == 5
    assert set(seq.gaps_plus().tolist()) == {5}
    assert set(seq.gaps_minus().tolist()) == {5}
    assert seq.block_dimension(2) == 10


def test_power_and_geometric_families():
    power = SparseSubsequence.power(2.0, 6)
    np.testing.assert_array_equal(power.sites, [-36, -25, -16, -9, -4, -1, 0, 1, 4, 9, 16, 25, 36])

    geometric = SparseSubsequence.geometric(2, 5)
    np.testing.assert_array_equal(geometric.sites, [-32, -16, -8, -4, -2, 0, 2, 4, 8, 16, 32])
    assert geometric.structural_q == 1.0


def test_negative_side_gap_convention():
    seq = SparseSubsequence.explicit([-10, -4, 0, 3, 9])
    # g_m = j_m − j_{m−1} for m < 0
    assert seq.gap(-1) == 6
    assert seq.gap(0) == 3
    assert seq.gap(1) == 6
    assert seq.left_gap(1) == 3
    np.testing.assert_array_equal(seq.gaps_minus(), [6])
    np.testing.assert_array_equal(seq.gaps_plus(), [3, 6])


def test_block_of_cmv_and_index_lookup():
    seq = SparseSubsequence.arithmetic(3, 4)
    # ℋ_0 spans CMV 0..5, ℋ_{-1} spans −6..−1
    np.testing.assert_array_equal(seq.block_of_cmv(np.array([0, 5, 6, -1, -6])), [0, 0, 1, -1, -1])
    hit, m = seq.index_of_sites(np.array([-3, 0, 4, 9]))
    np.testing.assert_array_equal(hit, [True, True, False, True])
    assert m[0] == -1 and m[1] == 0 and m[3] == 3
    with pytest.raises(InvalidArgumentError):
        seq.block_of_cmv(np.array([100]))


def test_extended_to_cover_grows_generator_families():
    seq = SparseSubsequence.arithmetic(4, 2)
    assert not seq.covers(-30, 30)
    extended = seq.extended_to_cover(-30, 30)
    assert extended.covers(-30, 30)
    assert extended.horizon >= 8

    explicit = SparseSubsequence.explicit([-2, 0, 2])
    assert explicit.extended_to_cover(-30, 30) is explicit


def test_invalid_subsequences():
    with pytest.raises(InvalidParameterError):
        SparseSubsequence.arithmetic(0, 10)
    with pytest.raises(InvalidParameterError):
        SparseSubsequence.power(0.5, 10)
    with pytest.raises(InvalidParameterError):
        SparseSubsequence.geometric(1, 10)
    with pytest.raises(InvalidParameterError):
        SparseSubsequence.arithmetic(2, 0)
    with pytest.raises(InvalidParameterError):
        SparseSubsequence.geometric(2, 80)
    with pytest.raises(InvalidArgumentError):
        SparseSubsequence.explicit([1, 2, 3])
    with pytest.raises(InvalidArgumentError):
        SparseSubsequence.explicit([0, 0, 2])
    with pytest.raises(InvalidArgumentError):
        SparseSubsequence.arithmetic(2, 3).j(7)
