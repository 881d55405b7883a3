import json
from pathlib import Path

import numpy as np

from walk_lib.artifacts import (
    read_csv_artifact,
    read_json_artifact,
    run_metadata,
    to_jsonable,
    write_csv_artifact,
    write_json_artifact,
)
from walk_lib.constants import TOOL_VERSION
from walk_lib.enums import TheoremCase


def test_run_metadata_fields():
    meta = run_metadata("abc", [1, 2], 400, command="bounds")
    assert meta["config_hash"] == "abc"
    assert meta["seeds"] == [1, 2]
    assert meta["horizon"] == 400
    assert meta["tool_version"] == TOOL_VERSION
    assert meta["command"] == "bounds"
    assert "generated" in meta


def test_to_jsonable_handles_numeric_corner_cases():
    value = {
        "nan": float("nan"),
        "inf": np.float64(np.inf),
        "int": np.int64(3),
        "flag": np.bool_(True),
        "case": TheoremCase.UNIFORM_GAPS,
        "path": Path("results/x.csv"),
        "z": complex(1.0, -2.0),
        "arr": np.array([1.5, 2.5]),
        4: (1, 2),
    }
    assert to_jsonable(value) == {
        "nan": None,
        "inf": None,
        "int": 3,
        "flag": True,
        "case": "i",
        "path": "results/x.csv",
        "z": [1.0, -2.0],
        "arr": [1.5, 2.5],
        "4": [1, 2],
    }


def test_csv_artifact_keeps_metadata(tmp_path: Path) -> None:
    path = tmp_path / "nested" / "velocity.csv"
    meta = run_metadata("hash", [0], None)
    rows = [{"seed": 0, "t": 10, "vhat": 0.25, "ignored": "x"}, {"seed": 0, "t": 20, "vhat": 0.5}]
    write_csv_artifact(path, ["seed", "t", "vhat"], rows, meta)
    assert path.read_text(encoding="utf-8").startswith("# config_hash: \"hash\"\n")
    loaded_meta, loaded_rows = read_csv_artifact(path)
    assert loaded_meta["seeds"] == [0]
    assert loaded_meta["horizon"] is None
    assert loaded_rows == [
        {"seed": "0", "t": "10", "vhat": "0.25"},
        {"seed": "0", "t": "20", "vhat": "0.5"},
    ]


def test_json_artifact_layout(tmp_path: Path) -> None:
    path = tmp_path / "bounds.json"
    write_json_artifact(path, {"config_hash": "h"}, {"best": float("nan"), "case": TheoremCase.NO_CONCLUSION})
    payload = read_json_artifact(path)
    assert payload == {"meta": {"config_hash": "h"}, "data": {"best": None, "case": "no-conclusion"}}
    assert json.loads(path.read_text(encoding="utf-8")) == payload
