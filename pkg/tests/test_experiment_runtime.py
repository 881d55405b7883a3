from pathlib import Path

import numpy as np
import pytest

from walk_lib.artifacts import read_csv_artifact, read_json_artifact
from walk_lib.enums import DecayKind, FamilyKind, SubsequenceKind
from walk_lib.errors import SchemaError
from walk_lib.experiment_config_io import config_hash
from walk_lib.experiment_config_models import (
    DamanikCoinSpec,
    DecayParams,
    DenseLabSpec,
    ExperimentConfig,
    FamilySpec,
    ModelSpec,
    RandomCoinSpec,
    RandomParams,
    SparseOverlayCoinSpec,
    SparseOverlayParams,
    SubsequenceParams,
    SubsequenceSpec,
)
from walk_lib.experiment_runtime import (
    build_subsequence,
    build_walk,
    run_bounds,
    run_dense_lab,
    run_evolve,
    run_random_scan,
    run_validate,
)


def _overlay_config(tmp_path: Path, **kwargs) -> ExperimentConfig:
    c2 = SparseOverlayCoinSpec(params=SparseOverlayParams(decay=DecayParams(kind=DecayKind.INDEX_POWER)))
    return ExperimentConfig(
        model=ModelSpec(c2=c2),
        subsequence=SubsequenceSpec(kind=SubsequenceKind.ARITHMETIC, params=SubsequenceParams(step=5), horizon=100),
        output_dir=tmp_path,
        **kwargs,
    )


def test_evolve_writes_velocity_distribution_and_summary(tmp_path: Path) -> None:
    config = ExperimentConfig(
        family=FamilySpec(kind=FamilyKind.DELTA),
        t_grid=[10, 20, 40],
        snapshot_times=[5, 10],
        output_dir=tmp_path,
    )
    outcome = run_evolve(config, threads=2)
    assert [p.name for p in outcome.paths] == ["velocity.csv", "distribution.csv", "evolve_summary.json"]
    meta, rows = read_csv_artifact(tmp_path / "velocity.csv")
    assert meta["config_hash"] == config_hash(config)
    assert len(rows) == 3 * 3
    _, dist_rows = read_csv_artifact(tmp_path / "distribution.csv")
    assert {row["t"] for row in dist_rows} == {"5", "10"}
    summary = read_json_artifact(tmp_path / "evolve_summary.json")
    assert summary["data"]["distribution_psi_id"] == "delta0+"
    assert summary["data"]["velocity"]["proxy"] == pytest.approx(outcome.estimate.proxy)


def test_bounds_on_arithmetic_overlay(tmp_path: Path) -> None:
    outcome = run_bounds(_overlay_config(tmp_path))
    summary = outcome.report.summary()
    assert summary["primary_case"] == "i"
    # N is capped at half the horizon of 100 blocks, so the ladder stops at 32
    assert summary["best"] == pytest.approx(5.0 / 33.0)
    payload = read_json_artifact(tmp_path / "bounds.json")
    assert payload["data"]["summary"]["primary_case"] == "i"
    # the default t_grid ends at 400, which reaches the interfaces up to m = 80
    assert payload["data"]["within_reach"]["t"] == 400
    assert payload["data"]["within_reach"]["max_N"] == 80
    assert payload["data"]["within_reach"]["best"] == pytest.approx(5.0 / 33.0)
    _, rows = read_csv_artifact(tmp_path / "bounds_sweep.csv")
    assert len(rows) == len(outcome.report.entries)


def test_bounds_need_a_subsequence(tmp_path: Path) -> None:
    with pytest.raises(SchemaError) as excinfo:
        run_bounds(ExperimentConfig(output_dir=tmp_path))
    assert excinfo.value.key_path == "subsequence"


def test_barrier_coins_report_no_conclusion(tmp_path: Path) -> None:
    config = ExperimentConfig(model=ModelSpec(c2=DamanikCoinSpec()), output_dir=tmp_path)
    outcome = run_bounds(config)
    summary = outcome.report.summary()
    assert summary["primary_case"] == "no-conclusion"
    assert summary["barrier_growth_diverging"]
    assert summary["barrier_gap_weighted_log"] > 0.0
    assert summary["gap_weighted"] > 1.0


def test_sparse_overlay_without_subsequence_is_a_schema_error(tmp_path: Path) -> None:
    config = ExperimentConfig(model=ModelSpec(c2=SparseOverlayCoinSpec()), output_dir=tmp_path)
    with pytest.raises(SchemaError) as excinfo:
        build_walk(config)
    assert excinfo.value.key_path == "model.c2"


def test_invalid_subsequence_parameters(tmp_path: Path) -> None:
    spec = SubsequenceSpec(kind=SubsequenceKind.EXPLICIT, params=SubsequenceParams(sites=[3, 1]))
    with pytest.raises(SchemaError) as excinfo:
        build_subsequence(spec, 10)
    assert excinfo.value.key_path == "subsequence.params"


def test_random_coins_default_to_independent_streams(tmp_path: Path) -> None:
    config = ExperimentConfig(model=ModelSpec(c1=RandomCoinSpec(), c2=RandomCoinSpec()), output_dir=tmp_path)
    walk = build_walk(config)
    sites = np.arange(-50, 51)
    assert not np.array_equal(walk.c1.transmission_moduli(sites), walk.c2.transmission_moduli(sites))


def test_random_coins_with_the_same_stream_are_rejected(tmp_path: Path) -> None:
    same = RandomCoinSpec(seed=4, params=RandomParams(stream=3))
    config = ExperimentConfig(model=ModelSpec(c1=same, c2=same), output_dir=tmp_path)
    with pytest.raises(SchemaError) as excinfo:
        build_walk(config)
    assert excinfo.value.key_path == "model.c2"
    # an explicit stream equal to the other key's default collides too
    clash = ExperimentConfig(
        model=ModelSpec(c1=RandomCoinSpec(params=RandomParams(stream=2)), c2=RandomCoinSpec()), output_dir=tmp_path
    )
    with pytest.raises(SchemaError):
        build_walk(clash)


def test_random_scan_needs_its_section(tmp_path: Path) -> None:
    with pytest.raises(SchemaError) as excinfo:
        run_random_scan(ExperimentConfig(output_dir=tmp_path))
    assert excinfo.value.key_path == "random"


def test_dense_lab_compares_commutators(tmp_path: Path) -> None:
    config = _overlay_config(
        tmp_path,
        family=FamilySpec(kind=FamilyKind.DELTA),
        dense=DenseLabSpec(site_lo=-16, site_hi=15, n_values=[0, 1], symmetry_t_grid=[4, 8], dump_matrices=True),
    )
    outcome = run_dense_lab(config)
    data = outcome.data
    assert max(data["unitarity_defect"].values()) <= 1e-12
    assert [(c["kind"].value, c["N"]) for c in data["commutators"]] == [("tilde", 0), ("tilde", 1), ("hat", 1)]
    assert all(c["difference"] <= 1e-10 for c in data["commutators"])
    assert data["q_bound_witness"]["holds"]
    assert {p.name for p in outcome.paths} == {"dense_lab.json", "matrix_L.csv", "matrix_M.csv", "matrix_W.csv"}


def test_validate_writes_a_report(tmp_path: Path) -> None:
    outcome = run_validate(seeds=[0], checks=["relative-bound"], output_dir=tmp_path)
    assert outcome.report.passed
    payload = read_json_artifact(tmp_path / "validation.json")
    assert payload["meta"]["scale"] == "quick"
    assert payload["data"]["passed"]
