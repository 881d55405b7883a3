"""
Turns a validated `ExperimentConfig` into lab objects and runs the
experiments behind each command, writing their artifacts into the output
directory.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from walk_lib.artifacts import run_metadata, write_csv_artifact, write_json_artifact
from walk_lib.bounds import (
    BoundReport,
    bound_within_reach,
    commutator_norm_formula,
    effective_q,
    evaluate_bounds,
    gap_stats,
    sparse_barrier_diagnostics,
    tail_shift_sweep,
)
from walk_lib.coins import (
    CoinSequence,
    DamanikCoins,
    DamanikSpec,
    LocalCoin,
    SparseOverlaySpec,
    barriers_for,
    coins_summary,
    decay_profile,
    load_coin_table,
    make_damanik,
    make_homogeneous,
    make_sparse_overlay,
)
from walk_lib.constants import (
    BOUNDS_JSON,
    BOUNDS_SWEEP_CSV,
    COIN_STREAMS,
    DENSE_LAB_JSON,
    DISTRIBUTION_CSV_PREFIX,
    EVOLVE_SUMMARY_JSON,
    MATRIX_CSV_PREFIX,
    RANDOM_SCAN_CSV,
    RANDOM_SUMMARY_JSON,
    VALIDATION_JSON,
    VELOCITY_CSV,
)
from walk_lib.enums import DistributionKind, ModifiedPositionKind, SubsequenceKind, TheoremCase
from walk_lib.errors import (
    AlignmentError,
    InsufficientDataError,
    InvalidArgumentError,
    InvalidCoinError,
    InvalidParameterError,
    NotInJError,
    SchemaError,
)
from walk_lib.experiment_config_io import config_hash
from walk_lib.experiment_config_models import (
    CoinSpec,
    DistributionParams,
    ExperimentConfig,
    RandomCoinSpec,
    SubsequenceSpec,
)
from walk_lib.observables import VelocityEstimate, build_family, distribution, velocity_proxy
from walk_lib.random_suite import (
    RandomExperimentReport,
    TailDistribution,
    random_zero_velocity_experiment,
    sample_coins,
    scan_diagnostics,
)
from walk_lib.subsequence import SparseSubsequence
from walk_lib.truncated_lab import (
    build_truncated,
    cmv_ordering_check,
    cmv_window,
    compare_commutator,
    embed_state,
    q_bound_witness,
    write_matrix_csv,
)
from walk_lib.validation import ValidationReport, run_validation
from walk_lib.walk_engine import SplitStepWalk, evolve_trajectory

VELOCITY_FIELDS = ["t", "psi_id", "vhat", "second_moment", "tail_p_at_v"]
DISTRIBUTION_FIELDS = ["t", "j", "p"]
BOUNDS_FIELDS = ["k", "N", "value", "fk_plus", "fk_minus", "q", "horizon", "best"]
RANDOM_FIELDS = [
    "seed", "n_max", "good_count_pos", "good_count_neg", "max_ratio_tail", "bound_estimate", "vhat_tmax", "ratios_decreasing",
]

_BUILD_ERRORS = (InvalidParameterError, InvalidArgumentError, InvalidCoinError, AlignmentError)


# --- builders ---
def build_subsequence(spec: SubsequenceSpec, horizon: int) -> SparseSubsequence:
    params = spec.params
    try:
        if spec.kind == SubsequenceKind.ARITHMETIC:
            return SparseSubsequence.arithmetic(params.step, horizon)
        if spec.kind == SubsequenceKind.POWER:
            return SparseSubsequence.power(params.exponent, horizon)
        if spec.kind == SubsequenceKind.GEOMETRIC:
            return SparseSubsequence.geometric(params.base, horizon)
        return SparseSubsequence.explicit(params.sites)
    except _BUILD_ERRORS as e:
        raise SchemaError(f"Invalid subsequence: {e}", "subsequence.params", original_exception=e)


def tail_distribution(params: DistributionParams) -> TailDistribution:
    if params.kind == DistributionKind.UNIFORM:
        return TailDistribution.uniform()
    return TailDistribution(params.kind, alpha=params.alpha, c=params.c, x0=params.x0, atom_mass=params.atom_mass)


def _random_source(spec: RandomCoinSpec, key: str, default_seed: int) -> Tuple[int, int]:
    seed = spec.seed if spec.seed is not None else default_seed
    stream = spec.params.stream if spec.params.stream is not None else COIN_STREAMS[key]
    return seed, stream


def _build_coin(spec: CoinSpec, key: str, subsequence: Optional[SparseSubsequence], default_seed: int) -> CoinSequence:
    params = spec.params
    if spec.kind == "homogeneous":
        return make_homogeneous(complex(params.a, params.a_imag))
    if spec.kind == "table":
        return load_coin_table(params.path, LocalCoin.from_transmission(params.default_a))
    if spec.kind == "sparse-overlay":
        if subsequence is None:
            raise InvalidArgumentError("sparse-overlay coins need a subsequence section")
        decay = decay_profile(params.decay.kind, params.decay.scale, params.decay.power)
        return make_sparse_overlay(SparseOverlaySpec(LocalCoin.from_transmission(params.base_a), subsequence, decay))
    if spec.kind == "random":
        seed, stream = _random_source(spec, key, default_seed)
        return sample_coins(tail_distribution(params.distribution), seed, stream)
    return make_damanik(DamanikSpec(params.eta, barriers_for(params.barriers, params.count)))


def build_coins(
    spec: CoinSpec,
    key: str,
    subsequence: Optional[SparseSubsequence],
    default_seed: int = 0,
) -> CoinSequence:
    try:
        coins = _build_coin(spec, key, subsequence, default_seed)
    except _BUILD_ERRORS as e:
        raise SchemaError(f"Invalid coin sequence '{key}': {e}", f"model.{key}", original_exception=e)
    if spec.phases:
        coins = coins.with_phases(spec.phases)
    return coins


def config_subsequence(config: ExperimentConfig) -> Optional[SparseSubsequence]:
    if config.subsequence is None:
        return None
    return build_subsequence(config.subsequence, config.get_horizon())


def build_walk(config: ExperimentConfig, subsequence: Optional[SparseSubsequence] = None) -> SplitStepWalk:
    if subsequence is None:
        subsequence = config_subsequence(config)
    seed = config.seeds[0]
    c1, c2 = config.model.c1, config.model.c2
    if isinstance(c1, RandomCoinSpec) and isinstance(c2, RandomCoinSpec):
        if _random_source(c1, "c1", seed) == _random_source(c2, "c2", seed):
            raise SchemaError("c1 and c2 draw from the same (seed, stream); the two coins would be identical", "model.c2")
    return SplitStepWalk(
        build_coins(config.model.c1, "c1", subsequence, seed),
        build_coins(config.model.c2, "c2", subsequence, seed),
    )


def _metadata(config: ExperimentConfig, **extra) -> dict:
    return run_metadata(config_hash(config), config.seeds, config.get_horizon(), name=config.name, **extra)


# --- evolve ---
@dataclass
class EvolveOutcome:
    estimate: VelocityEstimate
    paths: List[Path] = field(default_factory=list)


def run_evolve(config: ExperimentConfig, threads: int = 1) -> EvolveOutcome:
    walk = build_walk(config)
    fam = config.family
    family = build_family(fam.kind, fam.thetas, fam.packet_width)
    estimate = velocity_proxy(walk, family, config.t_grid, threads=threads, family_label=str(fam.kind))
    out = config.output_dir
    meta = _metadata(config)

    paths = [write_csv_artifact(out / VELOCITY_CSV, VELOCITY_FIELDS, (s.row() for s in estimate.samples), meta)]

    member = family[0]
    rows: List[dict] = []
    for t, state in sorted(evolve_trajectory(walk, member.state, config.get_snapshot_times()).items()):
        rows.extend(distribution(state, t).rows())
    paths.append(
        write_csv_artifact(out / f"{DISTRIBUTION_CSV_PREFIX}.csv", DISTRIBUTION_FIELDS, rows, {**meta, "psi_id": member.psi_id})
    )

    data = {
        "velocity": estimate.summary(),
        "coins": coins_summary([walk.c1, walk.c2]),
        "t_grid": list(config.t_grid),
        "distribution_psi_id": member.psi_id,
    }
    paths.append(write_json_artifact(out / EVOLVE_SUMMARY_JSON, meta, data))
    logger.info(f"Velocity proxy {estimate.proxy:.6g} over {len(family)} states")
    return EvolveOutcome(estimate=estimate, paths=paths)


# --- bounds ---
@dataclass
class BoundsOutcome:
    report: BoundReport
    paths: List[Path] = field(default_factory=list)


def _barrier_report(walk: SplitStepWalk) -> Optional[BoundReport]:
    barriers = [c for c in (walk.c1, walk.c2) if isinstance(c, DamanikCoins)]
    if not barriers:
        return None
    diag = sparse_barrier_diagnostics(barriers[0].spec)
    report = BoundReport(cases=[diag.case], primary_case=diag.case, gap_weighted=diag.gap_weighted)
    report.notes["barrier_growth_log"] = diag.growth_log
    report.notes["barrier_growth_diverging"] = diag.diverging
    report.notes["barrier_gap_weighted_log"] = diag.gap_weighted_log
    if diag.case == TheoremCase.NO_CONCLUSION:
        logger.warning("Sparse barrier coins: the gap-weighted terms do not decay, the bounds give no conclusion")
    return report


def run_bounds(config: ExperimentConfig) -> BoundsOutcome:
    seq = config_subsequence(config)
    walk = build_walk(config, seq)
    coins: Dict[int, CoinSequence] = walk.coin_map()
    extra: Dict[str, object] = {}

    report = _barrier_report(walk)
    if report is None:
        if seq is None:
            raise SchemaError("The bounds command needs a subsequence section.", "subsequence")
        report = evaluate_bounds(seq, coins, config.n_range)
        t_max = config.t_grid[-1]
        try:
            reach = bound_within_reach(seq, coins, t_max, config.n_range)
            extra["within_reach"] = {"t": t_max, "max_N": reach.max_N, "best": reach.best if reach.best_entry else None}
        except (InsufficientDataError, NotInJError) as e:
            extra["within_reach"] = None
            logger.debug(f"Bound within reach of t={t_max} skipped: {e}")
        try:
            extra["gap_stats"] = asdict(gap_stats(seq))
        except (InsufficientDataError, NotInJError) as e:
            extra["gap_stats"] = None
            logger.debug(f"Gap statistics unavailable: {e}")
        try:
            if effective_q(seq) > 0.0:
                best_k = report.best_entry.k if report.best_entry else 2
                sweep = tail_shift_sweep(seq, coins, best_k)
                extra["tail_shift"] = {"best": sweep.best, "best_shift": sweep.best_shift, "values": sweep.values}
        except (InsufficientDataError, NotInJError) as e:
            logger.debug(f"Tail shift sweep skipped: {e}")

    out = config.output_dir
    meta = _metadata(config)
    data = {"summary": report.summary(), "entries": report.rows(), **extra}
    paths = [
        write_json_artifact(out / BOUNDS_JSON, meta, data),
        write_csv_artifact(out / BOUNDS_SWEEP_CSV, BOUNDS_FIELDS, report.rows(), meta),
    ]
    return BoundsOutcome(report=report, paths=paths)


# --- random scan ---
@dataclass
class RandomScanOutcome:
    report: RandomExperimentReport
    paths: List[Path] = field(default_factory=list)


def run_random_scan(config: ExperimentConfig, threads: int = 1) -> RandomScanOutcome:
    if config.random is None:
        raise SchemaError("The random-scan command needs a random section.", "random")
    spec = config.random
    try:
        dist = tail_distribution(spec.distribution)
    except _BUILD_ERRORS as e:
        raise SchemaError(f"Invalid distribution: {e}", "random.distribution", original_exception=e)

    report = random_zero_velocity_experiment(dist, config.seeds, spec.t_max, spec.n_max, threads, n_range=config.n_range)
    diag = scan_diagnostics(dist, config.seeds, spec.n_max, dyadic_scales=range(5, 16))

    out = config.output_dir
    meta = _metadata(config, generator=report.generator, distribution=report.distribution)
    paths = [
        write_csv_artifact(out / RANDOM_SCAN_CSV, RANDOM_FIELDS, (r.row() for r in report.rows), meta),
        write_json_artifact(
            out / RANDOM_SUMMARY_JSON,
            meta,
            {
                "summary": report.summary(),
                "scans": diag.summary(),
                "no_conclusion_seeds": [r.seed for r in report.rows if r.no_conclusion],
            },
        ),
    ]
    return RandomScanOutcome(report=report, paths=paths)


# --- dense lab ---
@dataclass
class DenseLabOutcome:
    data: dict
    paths: List[Path] = field(default_factory=list)


def run_dense_lab(config: ExperimentConfig) -> DenseLabOutcome:
    dense = config.dense
    try:
        window = cmv_window(dense.site_lo, dense.site_hi)
    except _BUILD_ERRORS as e:
        raise SchemaError(f"Invalid dense window: {e}", "dense", original_exception=e)
    seq = config_subsequence(config)
    walk = build_walk(config, seq)
    factors = build_truncated(walk.factors(), window, dense.boundary)

    data: dict = {
        "window": {"n_lo": window[0], "n_hi": window[1], "boundary": dense.boundary},
        "unitarity_defect": {
            "L": factors.L.unitarity_defect(),
            "M": factors.M.unitarity_defect(),
            "W": factors.W.unitarity_defect(),
        },
    }
    family = build_family(config.family.kind, config.family.thetas, config.family.packet_width)
    try:
        vectors = [embed_state(member.state, window) for member in family]
        symmetry = cmv_ordering_check(factors, dense.symmetry_t_grid, vectors)
        data["ordering"] = {"proxies": symmetry.proxies, "max_discrepancy": symmetry.max_discrepancy, "passed": symmetry.passed}
    except InvalidArgumentError as e:
        logger.warning(f"Ordering check skipped: {e}")

    if seq is not None:
        seq = seq.extended_to_cover(dense.site_lo - 1, dense.site_hi + 1)
        comparisons = []
        try:
            for N in dense.n_values:
                kinds = [ModifiedPositionKind.TILDE] + ([ModifiedPositionKind.HAT] if N >= 1 else [])
                for kind in kinds:
                    formula = commutator_norm_formula(seq, walk.c2, kind, N, (dense.site_lo, dense.site_hi))
                    c = compare_commutator(seq, factors, kind, N, formula)
                    comparisons.append(
                        {"kind": kind, "N": N, "formula": c.formula, "dense": c.dense,
                         "difference": c.difference, "off_diagonal": c.off_diagonal, "interfaces": c.interfaces}
                    )
        except InvalidArgumentError as e:
            raise SchemaError(f"Subsequence does not cover the dense window: {e}", "dense", original_exception=e)
        data["commutators"] = comparisons
        try:
            rng = np.random.default_rng([config.seeds[0], 11])
            witness = q_bound_witness(seq, max(dense.n_values, default=0), window, rng)
            data["q_bound_witness"] = asdict(witness) | {"holds": witness.holds}
        except (InsufficientDataError, NotInJError) as e:
            logger.warning(f"Q-bound witness skipped: {e}")

    out = config.output_dir
    paths = [write_json_artifact(out / DENSE_LAB_JSON, _metadata(config), data)]
    if dense.dump_matrices:
        for op in (factors.L, factors.M, factors.W):
            path = out / f"{MATRIX_CSV_PREFIX}_{op.label}.csv"
            count = write_matrix_csv(path, op)
            logger.debug(f"Wrote {count} entries of {op.label} to {path}")
            paths.append(path)
    return DenseLabOutcome(data=data, paths=paths)


# --- validate ---
@dataclass
class ValidateOutcome:
    report: ValidationReport
    paths: List[Path] = field(default_factory=list)


def run_validate(
    seeds: Sequence[int] = (0,),
    full: bool = False,
    threads: int = 1,
    checks: Optional[Sequence[str]] = None,
    output_dir: Optional[Path] = None,
) -> ValidateOutcome:
    report = run_validation(seeds, full=full, threads=threads, checks=checks)
    paths: List[Path] = []
    if output_dir is not None:
        meta = run_metadata(None, seeds, None, scale="full" if full else "quick")
        paths.append(write_json_artifact(output_dir / VALIDATION_JSON, meta, report.summary()))
    return ValidateOutcome(report=report, paths=paths)
