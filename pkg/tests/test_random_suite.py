import math

import numpy as np
import pytest

from walk_lib.coins import TableCoins
from walk_lib.enums import DistributionKind
from walk_lib.errors import InvalidParameterError
from walk_lib.random_suite import (
    GENERATOR_ID,
    GoodIndexScan,
    SideScan,
    TailDistribution,
    block_gap_diagnostics,
    block_length,
    dyadic_empty_blocks,
    dyadic_empty_probability,
    ecdf_domination,
    extract_good_subsequence,
    random_zero_velocity_experiment,
    sample_coins,
    scan_diagnostics,
)


def test_tail_distribution_validation_and_cdf():
    dist = TailDistribution.power_law(0.5)
    assert dist.cdf(np.array([0.0, 0.25, 1.0])).tolist() == [0.0, 0.5, 1.0]
    atom = TailDistribution.atom(0.2)
    assert atom.cdf(np.array([0.0]))[0] == pytest.approx(0.2)
    assert TailDistribution.uniform().kind == DistributionKind.UNIFORM
    with pytest.raises(InvalidParameterError):
        TailDistribution.power_law(0.0)
    with pytest.raises(InvalidParameterError):
        TailDistribution.atom(1.5)
    with pytest.raises(InvalidParameterError):
        TailDistribution(DistributionKind.POWER_LAW, c=0.0)


def test_sampled_coins_are_reproducible_and_order_independent():
    dist = TailDistribution.power_law(0.5)
    first = sample_coins(dist, seed=7, stream=1)
    second = sample_coins(dist, seed=7, stream=1)
    sites = np.array([5000, -3, 0, 12, -9000])
    forward = first.transmission(sites)
    backward = second.transmission(sites[::-1])[::-1]
    np.testing.assert_array_equal(forward, backward)
    other_stream = sample_coins(dist, seed=7, stream=2).transmission(sites)
    assert not np.array_equal(forward, other_stream)
    assert np.all((forward >= 0.0) & (forward <= 1.0))


def test_uniform_distribution_takes_signed_values():
    values = sample_coins(TailDistribution.uniform(), seed=1).transmission(np.arange(-500, 500))
    assert values.min() < 0.0 < values.max()
    assert np.all(np.abs(values) <= 1.0)


def test_atom_of_full_mass_reflects_everywhere():
    coins = sample_coins(TailDistribution.atom(1.0), seed=3)
    np.testing.assert_array_equal(coins.transmission(np.arange(-50, 50)), 0.0)


def test_ecdf_domination_on_pooled_samples():
    dist = TailDistribution.power_law(0.5)
    coins = sample_coins(dist, seed=0)
    checks = ecdf_domination(coins.transmission(np.arange(-200000, 200000)), dist)
    assert [c.x for c in checks] == [0.01, 0.05, 0.1]
    assert all(c.ok for c in checks)


def test_extract_good_subsequence_from_a_table():
    # |a(k)| ≤ 1/k at k = 2, 5 and −3 among the tabulated sites
    a = {2: 0.4, 3: 0.9, 5: 0.1, -3: 0.2, -4: 0.5}
    sites = np.array(sorted(a))
    moduli = np.array([a[int(n)] for n in sites])
    table = TableCoins(sites, moduli, np.sqrt(1.0 - moduli**2))
    scan = extract_good_subsequence(table, 6)
    # sites outside the table default to the identity coin, which passes only at k = 1
    assert scan.positive.good.tolist() == [1, 2, 5]
    assert scan.negative.good.tolist() == [1, 3]
    assert scan.insufficient
    seq = scan.subsequence()
    assert seq.sites.tolist() == [-3, -1, 0, 1, 2, 5]
    with pytest.raises(InvalidParameterError):
        extract_good_subsequence(table, 0)


def test_side_scan_counts_and_ratios():
    side = SideScan(np.array([2, 4, 8, 16]))
    assert side.count == 4
    assert side.count_upto(8) == 3
    np.testing.assert_allclose(side.ratios(), [1.0, 1.0, 1.0])
    assert dyadic_empty_blocks(side, [1, 2, 4, 5]) == {1: False, 2: False, 4: False, 5: True}


def test_ratio_trend_of_good_indices():
    squares = SideScan(np.arange(1, 21) ** 2)
    doubling = SideScan(2 ** np.arange(1, 12))
    assert GoodIndexScan(n_max=400, positive=squares, negative=squares).ratios_decreasing
    # g_m/j_m = 1 for every m, so the trend never falls
    assert not GoodIndexScan(n_max=2048, positive=doubling, negative=squares).ratios_decreasing


def test_block_length_and_dyadic_probability():
    assert block_length(100, 0.5) == math.ceil(10 * math.log(100) ** 2)
    assert dyadic_empty_probability(1) == pytest.approx(1.0 / 3.0)
    assert dyadic_empty_probability(10) == pytest.approx((2**10 - 1) / (2**11 - 1))


def test_block_gap_diagnostics_flags_sparse_stretches():
    scan = extract_good_subsequence(sample_coins(TailDistribution.power_law(0.5), seed=2), 20000)
    report = block_gap_diagnostics(scan, 0.5)
    assert report.alpha == 0.5
    for side in (report.positive, report.negative):
        assert side.checked <= len(scan.positive.good) + len(scan.negative.good)
        assert sum(side.by_scale.values()) == len(side.occurrences)


def test_power_law_good_indices_grow_like_square_root():
    dist = TailDistribution.power_law(0.5)
    diag = scan_diagnostics(dist, seeds=range(10), n_max=10**4, dyadic_scales=range(3, 14))
    assert all(c.ok for c in diag.ecdf)
    median = diag.good_count_medians[10**4]
    assert abs(median - 2.0 * math.sqrt(10**4)) <= 0.25 * 2.0 * math.sqrt(10**4)
    assert 0.0 <= diag.envelope_pass_fraction <= 1.0
    assert set(diag.dyadic_expected) == set(range(3, 13))
    summary = diag.summary()
    assert summary["distribution"] == dist.label


def test_scan_diagnostics_needs_seeds():
    with pytest.raises(InvalidParameterError):
        scan_diagnostics(TailDistribution.uniform(), seeds=[], n_max=100)


def test_random_experiment_report():
    dist = TailDistribution.power_law(0.5)
    report = random_zero_velocity_experiment(dist, seeds=[3, 1, 2], t_max=50, n_max=2000, threads=2)
    assert [r.seed for r in report.rows] == [1, 2, 3]
    assert report.generator == GENERATOR_ID
    assert report.aggregate["seed_count"] == 3
    for row in report.rows:
        assert row.good_count_pos > 0
        assert 0.0 <= row.vhat_tmax <= 1.0 + 1e-9
        csv_row = row.row()
        assert csv_row["seed"] == row.seed
        assert csv_row["ratios_decreasing"] == row.ratios_decreasing
        if not row.ratios_decreasing:
            assert row.no_conclusion
    summary = report.summary()
    assert summary["seeds"] == [1, 2, 3]
    with pytest.raises(InvalidParameterError):
        random_zero_velocity_experiment(dist, seeds=[0], t_max=0)
