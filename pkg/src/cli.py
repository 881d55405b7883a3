import sys
from pathlib import Path
from typing import List, NoReturn, Optional

import typer
from loguru import logger
from typing_extensions import Annotated

from walk_lib import errors
from walk_lib.experiment_config_io import apply_overrides, load_experiment_config, write_experiment_config
from walk_lib.experiment_config_models import ExperimentConfig, SubsequenceSpec
from walk_lib.experiment_runtime import run_bounds, run_dense_lab, run_evolve, run_random_scan, run_validate
from walk_lib.helpers import parse_seed_list

EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_VALIDATION = 3

app = typer.Typer(
    name="split-walk",
    help="Experiments on zero velocity of one-dimensional split-step quantum walks.",
    no_args_is_help=True,
)


@app.callback()
def main(
    verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Show diagnostic logs.")] = False,
) -> None:
    logger.remove()
    if verbose:
        logger.add(sys.stderr, level="TRACE")
    else:
        logger.add(sys.stderr, level="WARNING")


ConfigOption = Annotated[Path, typer.Option("--config", "-c", help="Experiment config (JSON).")]
OutOption = Annotated[Optional[Path], typer.Option("--out", "-o", help="Output directory; overrides the config.")]
SeedsOption = Annotated[Optional[str], typer.Option("--seeds", help="Comma separated seeds, e.g. 0,1,2.")]
HorizonOption = Annotated[Optional[int], typer.Option("--horizon", help="Number of materialized blocks per side.")]
ThreadsOption = Annotated[int, typer.Option("--threads", "-t", min=1, help="Worker threads.")]


def _parse_seeds(seeds: Optional[str]) -> Optional[List[int]]:
    if seeds is None:
        return None
    try:
        return parse_seed_list(seeds)
    except ValueError as e:
        typer.secho(f"Error parsing seeds '{seeds}': {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=EXIT_CONFIG)


def get_config(
    config: Path,
    out: Optional[Path] = None,
    seeds: Optional[str] = None,
    horizon: Optional[int] = None,
) -> ExperimentConfig:
    """Loads the config file and applies the command-line overrides."""
    try:
        loaded = load_experiment_config(config)
        return apply_overrides(loaded, output_dir=out, seeds=_parse_seeds(seeds), horizon=horizon)
    except errors.SchemaError as e:
        typer.secho(f"Invalid config at '{e.key_path}': {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=EXIT_CONFIG)
    except errors.ExperimentConfigError as e:
        typer.secho(f"Error loading config: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=EXIT_CONFIG)


def _report_error(command: str, e: errors.WalkLabError) -> NoReturn:
    if isinstance(e, errors.ExperimentConfigError):
        key_path = f" at '{e.key_path}'" if isinstance(e, errors.SchemaError) else ""
        typer.secho(f"Invalid config{key_path}: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=EXIT_CONFIG)
    typer.secho(f"Error during '{command}': {e}", fg=typer.colors.RED, err=True)
    raise typer.Exit(code=EXIT_FAILURE)


def _print_paths(paths: List[Path]) -> None:
    for path in paths:
        typer.echo(f"  {path}")


@app.command()
def init(
    path: Annotated[Path, typer.Argument(help="Where to write the config file.")] = Path("experiment.json"),
    name: Annotated[str, typer.Option(help="Experiment name.")] = "experiment",
    force: Annotated[bool, typer.Option("--force", help="Overwrite an existing file.")] = False,
):
    """Writes a default experiment config to start from."""
    if path.exists() and not force:
        typer.secho(f"Config {path} already exists; use --force to overwrite.", fg=typer.colors.YELLOW, err=True)
        raise typer.Exit(code=EXIT_FAILURE)
    try:
        write_experiment_config(path, ExperimentConfig(name=name, subsequence=SubsequenceSpec()))
        typer.secho(f"Config '{name}' written to {path}", fg=typer.colors.GREEN)
    except errors.WriteConfigError as e:
        typer.secho(f"Error writing config: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=EXIT_FAILURE)


@app.command()
def evolve(
    config: ConfigOption,
    out: OutOption = None,
    seeds: SeedsOption = None,
    horizon: HorizonOption = None,
    threads: ThreadsOption = 1,
):
    """Evolves the initial-state family and estimates the finite-time velocity."""
    experiment = get_config(config, out, seeds, horizon)
    try:
        outcome = run_evolve(experiment, threads=threads)
    except errors.WalkLabError as e:
        _report_error("evolve", e)
    typer.secho(f"Velocity proxy: {outcome.estimate.proxy:.6g}", fg=typer.colors.GREEN)
    _print_paths(outcome.paths)


@app.command()
def bounds(
    config: ConfigOption,
    out: OutOption = None,
    seeds: SeedsOption = None,
    horizon: HorizonOption = None,
):
    """Evaluates the zero-velocity bounds on the configured subsequence."""
    experiment = get_config(config, out, seeds, horizon)
    try:
        outcome = run_bounds(experiment)
    except errors.WalkLabError as e:
        _report_error("bounds", e)
    summary = outcome.report.summary()
    if summary["best"] is None:
        typer.secho(f"No finite bound; case: {summary['primary_case']}", fg=typer.colors.YELLOW)
    else:
        typer.secho(
            f"Best bound {summary['best']:.6g} (k={summary['best_k']}, N={summary['best_N']}); case: {summary['primary_case']}",
            fg=typer.colors.GREEN,
        )
    _print_paths(outcome.paths)


@app.command("random-scan")
def random_scan(
    config: ConfigOption,
    out: OutOption = None,
    seeds: SeedsOption = None,
    threads: ThreadsOption = 1,
):
    """Samples random coins per seed, extracts good subsequences and evaluates bounds."""
    experiment = get_config(config, out, seeds)
    try:
        outcome = run_random_scan(experiment, threads=threads)
    except errors.WalkLabError as e:
        _report_error("random-scan", e)
    aggregate = outcome.report.aggregate
    typer.secho(
        f"{aggregate['seed_count']} seeds scanned, {aggregate['no_conclusion_count']} without conclusion",
        fg=typer.colors.GREEN,
    )
    _print_paths(outcome.paths)


@app.command("dense-lab")
def dense_lab(
    config: ConfigOption,
    out: OutOption = None,
    seeds: SeedsOption = None,
    horizon: HorizonOption = None,
):
    """Builds the truncated CMV factors and compares commutators with the closed forms."""
    experiment = get_config(config, out, seeds, horizon)
    try:
        outcome = run_dense_lab(experiment)
    except errors.WalkLabError as e:
        _report_error("dense-lab", e)
    defects = outcome.data["unitarity_defect"]
    typer.secho(f"Truncated W unitarity defect: {defects['W']:.2e}", fg=typer.colors.GREEN)
    _print_paths(outcome.paths)


@app.command()
def validate(
    seeds: SeedsOption = None,
    out: OutOption = None,
    threads: ThreadsOption = 1,
    full: Annotated[bool, typer.Option("--full", help="Run at full scale instead of the quick one.")] = False,
    check: Annotated[Optional[List[str]], typer.Option("--check", help="Run only this check; repeatable.")] = None,
):
    """Runs the self-checks and exits with code 3 if any of them fails."""
    seed_list = _parse_seeds(seeds) or [0]
    try:
        outcome = run_validate(seed_list, full=full, threads=threads, checks=check, output_dir=out)
    except errors.WalkLabError as e:
        _report_error("validate", e)
    report = outcome.report
    for result in report.results:
        color = typer.colors.GREEN if result.passed else typer.colors.RED
        status = "pass" if result.passed else "FAIL"
        typer.secho(f"[{status}] {result.name} (seed {result.seed}): {result.detail}", fg=color)
    _print_paths(outcome.paths)
    try:
        report.raise_for_failures()
    except errors.ValidationFailure as e:
        typer.secho(f"Validation failed: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=EXIT_VALIDATION)
    typer.secho("All checks passed.", fg=typer.colors.GREEN)


if __name__ == "__main__":
    app()
