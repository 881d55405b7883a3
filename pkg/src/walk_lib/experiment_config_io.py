from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from walk_lib.errors import LoadConfigError, SchemaError, WriteConfigError
from walk_lib.experiment_config_models import ExperimentConfig
from walk_lib.helpers import calculate_checksum, canonical_json


def _key_path(error: dict) -> str:
    return ".".join(str(part) for part in error.get("loc", ())) or "<root>"


def parse_experiment_config(contents: str, source: str = "<string>") -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate_json(contents)
    except ValidationError as e:
        errors = e.errors()
        first = errors[0] if errors else {}
        if first.get("type") == "json_invalid":
            raise LoadConfigError(f"Incorrect config file format (JSON decode error): {source}", original_exception=e)
        key_path = _key_path(first)
        raise SchemaError(f"Invalid config {source} at '{key_path}': {first.get('msg', e)}", key_path, original_exception=e)


def load_experiment_config(config_file_path: Path) -> ExperimentConfig:
    """Loads and validates an experiment configuration from a JSON file."""
    if not config_file_path.is_file():
        raise LoadConfigError(f"Config file not found: {config_file_path}")
    try:
        contents = config_file_path.read_text(encoding="utf-8")
    except OSError as e:
        raise LoadConfigError(f"Could not read config {config_file_path}: {e}", original_exception=e)
    config = parse_experiment_config(contents, str(config_file_path))
    _resolve_table_paths(config, config_file_path.parent)
    return config


def _resolve_table_paths(config: ExperimentConfig, base_dir: Path) -> None:
    """Coin table paths are relative to the config file."""
    for spec in (config.model.c1, config.model.c2):
        if spec.kind == "table" and not spec.params.path.is_absolute():
            spec.params.path = (base_dir / spec.params.path).resolve()


def write_experiment_config(config_file_path: Path, config: ExperimentConfig) -> None:
    """Writes the experiment configuration to a JSON file."""
    try:
        json_str = config.model_dump_json(indent=2)
        config_file_path.write_text(json_str, encoding="utf-8")
    except OSError as e:
        raise WriteConfigError(f"IO error writing config to {config_file_path}: {e}", original_exception=e)
    except Exception as e:
        raise WriteConfigError(f"Serialization error writing config: {e}", original_exception=e)


def config_hash(config: ExperimentConfig) -> str:
    """sha256 of the canonical JSON form of the validated config."""
    return calculate_checksum(canonical_json(config.model_dump(mode="json")))


def apply_overrides(
    config: ExperimentConfig,
    output_dir: Optional[Path] = None,
    seeds: Optional[List[int]] = None,
    horizon: Optional[int] = None,
) -> ExperimentConfig:
    """Command-line values take precedence over the file."""
    update: dict = {}
    if output_dir is not None:
        update["output_dir"] = output_dir
    if seeds:
        update["seeds"] = seeds
    if horizon is not None:
        if horizon < 1:
            raise SchemaError(f"Horizon must be ≥ 1, got {horizon}", "horizon")
        update["horizon"] = horizon
    if not update:
        return config
    return config.model_copy(update=update)
