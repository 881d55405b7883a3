"""
Result files. CSV artifacts start with `# key: value` comment lines carrying
the run metadata, then a header row. JSON artifacts are `{"meta": ..., "data": ...}`.
The `generated` timestamp is the only field that differs between two runs of
the same config.
"""
import csv
import enum
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from walk_lib.constants import TOOL_VERSION
from walk_lib.errors import ArtifactWriteError

META_PREFIX = "# "


def run_metadata(
    config_hash: Optional[str],
    seeds: Sequence[int],
    horizon: Optional[int],
    **extra: Any,
) -> Dict[str, Any]:
    meta: Dict[str, Any] = {
        "config_hash": config_hash,
        "seeds": list(seeds),
        "horizon": horizon,
        "tool_version": TOOL_VERSION,
        "generated": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    meta.update(extra)
    return meta


def to_jsonable(value: Any) -> Any:
    """Converts numpy scalars, enums, paths and non-finite floats into plain JSON values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def _ensure_parent(path: Path) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ArtifactWriteError(f"Cannot create output directory {path.parent}: {e}", original_exception=e)


def write_csv_artifact(
    path: Path,
    fieldnames: Sequence[str],
    rows: Iterable[Dict[str, Any]],
    meta: Dict[str, Any],
) -> Path:
    _ensure_parent(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as csvfile:
            for key, value in meta.items():
                csvfile.write(f"{META_PREFIX}{key}: {json.dumps(to_jsonable(value))}\n")
            writer = csv.DictWriter(csvfile, fieldnames=list(fieldnames), extrasaction="ignore")
            writer.writeheader()
            for row in rows:
                writer.writerow(row)
    except OSError as e:
        raise ArtifactWriteError(f"Could not write {path}: {e}", original_exception=e)
    logger.info(f"Wrote {path}")
    return path


def read_csv_artifact(path: Path) -> Tuple[Dict[str, Any], List[Dict[str, str]]]:
    """Inverse of `write_csv_artifact`: metadata lines and data rows."""
    meta: Dict[str, Any] = {}
    body: List[str] = []
    with open(path, "r", newline="", encoding="utf-8") as csvfile:
        for line in csvfile:
            if line.startswith(META_PREFIX) and not body:
                key, _, raw = line[len(META_PREFIX):].partition(": ")
                meta[key] = json.loads(raw)
            else:
                body.append(line)
    return meta, list(csv.DictReader(body))


def write_json_artifact(path: Path, meta: Dict[str, Any], data: Any) -> Path:
    _ensure_parent(path)
    payload = {"meta": to_jsonable(meta), "data": to_jsonable(data)}
    try:
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=False), encoding="utf-8")
    except (OSError, ValueError) as e:
        raise ArtifactWriteError(f"Could not write {path}: {e}", original_exception=e)
    logger.info(f"Wrote {path}")
    return path


def read_json_artifact(path: Path) -> Dict[str, Any]:
    return json.loads(path.read_text(encoding="utf-8"))
