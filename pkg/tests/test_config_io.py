import json
from pathlib import Path

import pytest

from walk_lib.errors import LoadConfigError, SchemaError, WriteConfigError
from walk_lib.experiment_config_io import (
    apply_overrides,
    config_hash,
    load_experiment_config,
    parse_experiment_config,
    write_experiment_config,
)
from walk_lib.experiment_config_models import ExperimentConfig, SubsequenceSpec


def _write(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def test_defaults_fill_every_section():
    config = parse_experiment_config("{}")
    assert config.schema_version == 1
    assert config.model.c1.kind == "homogeneous"
    assert config.subsequence is None
    assert config.get_horizon() == 400
    assert config.get_snapshot_times() == config.t_grid
    assert config.seeds == [0]


def test_coin_specs_are_discriminated_by_kind():
    config = parse_experiment_config(
        json.dumps(
            {
                "model": {
                    "c1": {"kind": "damanik", "params": {"eta": 0.25, "barriers": "tower"}},
                    "c2": {"kind": "random", "seed": 9, "phases": {"3": 1.5}},
                },
                "subsequence": {"kind": "geometric", "params": {"base": 3}, "horizon": 20},
                "horizon": 30,
            }
        )
    )
    assert config.model.c1.params.eta == 0.25
    assert config.model.c2.seed == 9
    assert config.model.c2.phases == {3: 1.5}
    assert config.get_horizon() == 30


def test_invalid_json_is_a_load_error():
    with pytest.raises(LoadConfigError):
        parse_experiment_config("{not json")


@pytest.mark.parametrize(
    "payload, key_path",
    [
        ({"schema_version": 2}, "schema_version"),
        ({"bogus": 1}, "bogus"),
        ({"t_grid": [100, 50]}, "t_grid"),
        ({"t_grid": []}, "t_grid"),
        ({"seeds": []}, "seeds"),
        ({"model": {"c1": {"kind": "table"}}}, "model.c1.table.params"),
        ({"model": {"c2": {"kind": "unknown"}}}, "model.c2"),
    ],
)
def test_schema_errors_carry_the_key_path(payload, key_path):
    with pytest.raises(SchemaError) as excinfo:
        parse_experiment_config(json.dumps(payload))
    assert excinfo.value.key_path == key_path


def test_load_missing_file(tmp_path: Path) -> None:
    with pytest.raises(LoadConfigError):
        load_experiment_config(tmp_path / "missing.json")


def test_table_paths_are_relative_to_the_config(tmp_path: Path) -> None:
    config_dir = tmp_path / "configs"
    config_dir.mkdir()
    path = _write(
        config_dir / "table.json",
        {"model": {"c2": {"kind": "table", "params": {"path": "coins.csv", "default_a": 0.5}}}},
    )
    config = load_experiment_config(path)
    assert config.model.c2.params.path == (config_dir / "coins.csv").resolve()


def test_write_and_reload(tmp_path: Path) -> None:
    config = ExperimentConfig(name="demo", subsequence=SubsequenceSpec(), seeds=[4, 5])
    path = tmp_path / "demo.json"
    write_experiment_config(path, config)
    loaded = load_experiment_config(path)
    assert loaded == config
    assert config_hash(loaded) == config_hash(config)


def test_write_to_missing_directory(tmp_path: Path) -> None:
    with pytest.raises(WriteConfigError):
        write_experiment_config(tmp_path / "nope" / "demo.json", ExperimentConfig())


def test_config_hash_tracks_content():
    base = ExperimentConfig()
    assert config_hash(base) == config_hash(ExperimentConfig())
    assert config_hash(base) != config_hash(ExperimentConfig(seeds=[1]))
    assert len(config_hash(base)) == 64


def test_overrides_take_precedence(tmp_path: Path) -> None:
    config = ExperimentConfig(seeds=[0])
    updated = apply_overrides(config, output_dir=tmp_path, seeds=[7, 8], horizon=50)
    assert updated.output_dir == tmp_path
    assert updated.seeds == [7, 8]
    assert updated.get_horizon() == 50
    assert config.seeds == [0]
    assert apply_overrides(config) is config
    with pytest.raises(SchemaError) as excinfo:
        apply_overrides(config, horizon=0)
    assert excinfo.value.key_path == "horizon"
