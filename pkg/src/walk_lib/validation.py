"""
Self-checks of the lab against exact identities and reference regimes.

Each check takes `ValidationSettings` and returns a `CheckResult`; checks that
exercise a replaceable piece (the stepper, the commutator formula) accept it
as a keyword so that a deliberately broken version can be shown to fail.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from walk_lib.bounds import (
    ModifiedPosition,
    bound_within_reach,
    classify_cases,
    commutator_norm_formula,
    evaluate_bounds,
    gap_weighted_bound,
    relative_bound_constant,
    relative_bound_from_q,
    sparse_barrier_diagnostics,
)
from walk_lib.coins import (
    HADAMARD_COIN,
    IDENTITY_COIN,
    REFLECTOR_COIN,
    DamanikSpec,
    HomogeneousCoins,
    SparseOverlayCoins,
    SparseOverlaySpec,
    TableCoins,
    decay_profile,
    factorial_barriers,
    make_homogeneous,
    random_unitary_table,
)
from walk_lib.constants import DEFAULT_N_RANGE, INV_SQRT2
from walk_lib.enums import BoundaryCompletion, DecayKind, ModifiedPositionKind, Spin, TheoremCase
from walk_lib.errors import InvalidArgumentError, ValidationFailure, WalkLabError
from walk_lib.lattice_state import CmvVector, WalkState, from_cmv, to_cmv
from walk_lib.observables import (
    chebyshev_holds,
    default_family,
    delta_family,
    distribution_at,
    velocity_proxy,
)
from walk_lib.random_suite import (
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
    dense_commutator,
    embed_state,
    modified_position_matrix,
    operator_norm,
    q_bound_witness,
)
from walk_lib.walk_engine import SplitStepWalk, StepFunction, evolve_trajectory, step_cmv, step_split

FormulaFunction = Callable[..., float]


@dataclass(frozen=True)
class ValidationSettings:
    seed: int = 0
    full: bool = False


@dataclass
class CheckResult:
    name: str
    passed: bool
    seed: int
    detail: str
    metrics: Dict[str, Any] = field(default_factory=dict)

    def row(self) -> dict:
        return {"name": self.name, "passed": self.passed, "seed": self.seed, "detail": self.detail, "metrics": self.metrics}


@dataclass
class ValidationReport:
    results: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if not r.passed]

    def summary(self) -> dict:
        return {
            "passed": self.passed,
            "checks": len(self.results),
            "failures": [f"{r.name} (seed {r.seed})" for r in self.failures],
            "results": [r.row() for r in self.results],
        }

    def raise_for_failures(self) -> None:
        if self.failures:
            first = self.failures[0]
            raise ValidationFailure(first.name, first.seed, first.detail)


def _result(name: str, settings: ValidationSettings, passed: bool, detail: str, **metrics: Any) -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), seed=settings.seed, detail=detail, metrics=metrics)


def _random_state(rng: np.random.Generator, lo: int, hi: int) -> WalkState:
    n = hi - lo + 1
    amps = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
    return WalkState(lo=lo, amps=amps).normalized()


def _cmv_difference(a: CmvVector, b: CmvVector) -> float:
    lo, hi = min(a.start, b.start), max(a.stop, b.stop)
    x = np.zeros(hi - lo + 1, dtype=np.complex128)
    y = np.zeros(hi - lo + 1, dtype=np.complex128)
    x[a.start - lo: a.stop - lo + 1] = a.values
    y[b.start - lo: b.stop - lo + 1] = b.values
    return float(np.abs(x - y).max())


def _state_difference(a: WalkState, b: WalkState) -> float:
    return _cmv_difference(to_cmv(a), to_cmv(b))


def check_split_matches_cmv(
    settings: ValidationSettings,
    configs: Optional[int] = None,
    steps: Optional[int] = None,
    stepper: StepFunction = step_split,
) -> CheckResult:
    """The split-step recursion and the LM product agree step by step under random coins."""
    configs = configs or (50 if settings.full else 8)
    steps = steps or (1000 if settings.full else 200)
    rng = np.random.default_rng([settings.seed, 1])
    worst_step = worst_drift = 0.0
    for _ in range(configs):
        radius = steps + 8
        walk = SplitStepWalk(random_unitary_table(rng, -radius, radius), random_unitary_table(rng, -radius, radius))
        factors = walk.factors()
        state = _random_state(rng, -4, 4)
        for _ in range(steps):
            nxt = stepper(walk, state)
            worst_step = max(worst_step, _cmv_difference(to_cmv(nxt), step_cmv(factors, to_cmv(state))))
            state = nxt
        worst_drift = max(worst_drift, abs(state.norm() - 1.0))
    passed = worst_step <= 1e-12 and worst_drift <= 1e-10
    return _result(
        "split-vs-cmv", settings, passed,
        f"max step difference {worst_step:.2e}, norm drift {worst_drift:.2e} over {configs}×{steps} steps",
        max_step_difference=worst_step, norm_drift=worst_drift,
    )


def check_mirror_identities(
    settings: ValidationSettings,
    stepper: StepFunction = step_split,
    site: int = 3,
) -> CheckResult:
    """With C₁ = 1 and a perfect reflector in C₂ at ℓ: Wδ_ℓ⁺ = −δ_{ℓ−1}⁻ and W²δ_{ℓ−1}⁺ = −δ_{ℓ−1}⁻."""
    walk = SplitStepWalk(HomogeneousCoins(IDENTITY_COIN), TableCoins.from_coins({site: REFLECTOR_COIN}, IDENTITY_COIN))
    expected = WalkState.delta(site - 1, Spin.MINUS)
    expected = WalkState(lo=expected.lo, amps=-expected.amps)
    one = _state_difference(stepper(walk, WalkState.delta(site, Spin.PLUS)), expected)
    two = _state_difference(stepper(walk, stepper(walk, WalkState.delta(site - 1, Spin.PLUS))), expected)
    passed = max(one, two) <= 1e-15
    return _result("mirror-identities", settings, passed, f"one-step {one:.2e}, two-step {two:.2e}", one_step=one, two_step=two)


def check_reflector_trapping(settings: ValidationSettings) -> CheckResult:
    """Zero coins at j_m = 5m trap a state supported in one block."""
    seq = SparseSubsequence.arithmetic(5, 16)
    c2 = SparseOverlayCoins(SparseOverlaySpec(HADAMARD_COIN, seq, decay_profile(DecayKind.ZERO)))
    walk = SplitStepWalk(HomogeneousCoins(HADAMARD_COIN), c2)
    rng = np.random.default_rng([settings.seed, 3])
    block = 2 * seq.j(1)
    values = rng.standard_normal(block) + 1j * rng.standard_normal(block)
    state = from_cmv(CmvVector(start=0, values=values / np.linalg.norm(values)))
    times = [1000, 2000, 3000, 4000, 5000] if settings.full else [250, 500, 1000]

    leak = 0.0
    speed_ok = True
    for t, evolved in evolve_trajectory(walk, state, times).items():
        vec = to_cmv(evolved)
        outside = (vec.indices < 0) | (vec.indices > block - 1)
        leak = max(leak, float(np.linalg.norm(vec.values[outside])))
        m2 = float(np.sum(evolved.sites.astype(np.float64) ** 2 * np.sum(np.abs(evolved.amps) ** 2, axis=1)))
        speed_ok = speed_ok and math.sqrt(m2) / t <= 5.0 / t + 1e-12
    passed = leak <= 1e-14 and speed_ok
    return _result("reflector-trapping", settings, passed, f"leak {leak:.2e} up to t={times[-1]}", leak=leak)


def check_a_priori_speed(settings: ValidationSettings) -> CheckResult:
    """Homogeneous coins: v̂ never exceeds |a|, and boosted packets come close to it."""
    t_grid = [1000, 1250, 1500, 1750, 2000]
    worst_excess = -math.inf
    worst_ratio = math.inf
    for a in (0.3, INV_SQRT2, 0.95):
        coins = make_homogeneous(a)
        estimate = velocity_proxy(SplitStepWalk(coins, coins), default_family(), t_grid)
        worst_excess = max(worst_excess, max(s.vhat for s in estimate.samples) - a)
        packet = max(v for k, v in estimate.per_state_proxy.items() if k.startswith("packet"))
        worst_ratio = min(worst_ratio, packet / a)
    passed = worst_excess <= 5e-3 and worst_ratio >= 0.9
    return _result(
        "a-priori-speed", settings, passed,
        f"max v̂ − |a| = {worst_excess:.3e}, min packet v̂/|a| = {worst_ratio:.3f}",
        max_excess=worst_excess, min_packet_ratio=worst_ratio,
    )


def _random_explicit_subsequence(rng: np.random.Generator, blocks: int = 40) -> SparseSubsequence:
    plus = np.cumsum(rng.integers(2, 9, size=blocks))
    minus = np.cumsum(rng.integers(2, 9, size=blocks))
    return SparseSubsequence.explicit(np.concatenate((-minus[::-1], [0], plus)).tolist())


def check_commutator_formula(
    settings: ValidationSettings,
    formula: FormulaFunction = commutator_norm_formula,
    site_window: Tuple[int, int] = (-64, 63),
) -> CheckResult:
    """
    ‖[Q̃_N, M]‖ and ‖[Q̂_N, M]‖ on a dense window against the per-interface
    formula, with [D, M][D, M]† diagonal and [Q̃_N, L] = 0.
    """
    rng = np.random.default_rng([settings.seed, 5])
    seq = _random_explicit_subsequence(rng)
    lo, hi = int(seq.sites[0]) - 1, int(seq.sites[-1]) + 1
    walk = SplitStepWalk(random_unitary_table(rng, lo, hi), random_unitary_table(rng, lo, hi))
    window = cmv_window(*site_window)
    factors = build_truncated(walk.factors(), window, BoundaryCompletion.IDENTITY)

    worst_diff = worst_off = worst_l = 0.0
    interfaces = 0
    cases = [(ModifiedPositionKind.TILDE, N) for N in range(4)] + [(ModifiedPositionKind.HAT, N) for N in range(1, 4)]
    for kind, N in cases:
        value = formula(seq, walk.c2, kind, N, site_window)
        comparison = compare_commutator(seq, factors, kind, N, value)
        worst_diff = max(worst_diff, comparison.difference)
        worst_off = max(worst_off, comparison.off_diagonal)
        interfaces = comparison.interfaces
        if kind == ModifiedPositionKind.TILDE:
            d = modified_position_matrix(ModifiedPosition(kind, N, seq), window)
            worst_l = max(worst_l, operator_norm(dense_commutator(d, factors.L.matrix)))
    passed = worst_diff <= 1e-10 and worst_off <= 1e-12 and worst_l <= 1e-12 and interfaces >= 6
    return _result(
        "commutator-formula", settings, passed,
        f"max |formula − dense| {worst_diff:.2e}, off-diagonal {worst_off:.2e}, ‖[Q̃, L]‖ {worst_l:.2e}, {interfaces} interfaces",
        max_difference=worst_diff, off_diagonal=worst_off, l_commutator=worst_l, interfaces=interfaces,
    )


def check_chebyshev(settings: ValidationSettings) -> CheckResult:
    """ℙ(|X_t| ≥ vt) ≤ M₂(t)/(vt)² on evolved distributions."""
    rng = np.random.default_rng([settings.seed, 6])
    walks = [
        SplitStepWalk(make_homogeneous(INV_SQRT2), make_homogeneous(INV_SQRT2)),
        SplitStepWalk(random_unitary_table(rng, -260, 260), random_unitary_table(rng, -260, 260)),
    ]
    ok = True
    worst_sum = 0.0
    for walk in walks:
        for member in delta_family():
            for t in (50, 200):
                dist = distribution_at(walk, member.state, t)
                worst_sum = max(worst_sum, abs(dist.total() - 1.0))
                ok = ok and all(chebyshev_holds(dist, v) for v in (0.1, 0.5, 1.0))
    passed = ok and worst_sum <= 1e-10
    return _result("chebyshev", settings, passed, f"all tails bounded: {ok}, mass defect {worst_sum:.2e}", mass_defect=worst_sum)


def check_relative_bound(settings: ValidationSettings) -> CheckResult:
    """c_N = 1 − (1+q)^{−(N+1)}, with c_N = 0 for arithmetic and 1 − 2^{−(N+1)} for base-2 geometric sites."""
    worst = 0.0
    for q in (0.0, 0.5, 1.0, 3.0):
        for N in DEFAULT_N_RANGE:
            worst = max(worst, abs(relative_bound_from_q(q, N) - (1.0 - (1.0 + q) ** (-(N + 1)))))
    arithmetic = SparseSubsequence.arithmetic(5, 64)
    geometric = SparseSubsequence.geometric(2, 40)
    for N in DEFAULT_N_RANGE:
        worst = max(worst, abs(relative_bound_constant(arithmetic, N)))
        worst = max(worst, abs(relative_bound_constant(geometric, N) - (1.0 - 2.0 ** (-(N + 1)))))
    passed = worst <= 1e-15
    return _result("relative-bound", settings, passed, f"max deviation {worst:.2e}", max_deviation=worst)


def check_dense_matches_engine(settings: ValidationSettings, steps: int = 30) -> CheckResult:
    """The truncated W reproduces the engine while the support stays inside the window."""
    rng = np.random.default_rng([settings.seed, 8])
    walk = SplitStepWalk(random_unitary_table(rng, -45, 45), random_unitary_table(rng, -45, 45))
    window = cmv_window(-40, 40)
    W = build_truncated(walk.factors(), window).W.matrix
    state = _random_state(rng, -3, 3)
    x = embed_state(state, window)
    worst = 0.0
    for _ in range(steps):
        x = W @ x
        state = step_split(walk, state)
        worst = max(worst, float(np.abs(x - embed_state(state, window)).max()))
    passed = worst <= 1e-12
    return _result("dense-vs-engine", settings, passed, f"max difference {worst:.2e} over {steps} steps", max_difference=worst)


def check_truncated_unitarity(settings: ValidationSettings) -> CheckResult:
    rng = np.random.default_rng([settings.seed, 9])
    walk = SplitStepWalk(random_unitary_table(rng, -70, 70), random_unitary_table(rng, -70, 70))
    worst = 0.0
    for boundary in BoundaryCompletion:
        tf = build_truncated(walk.factors(), cmv_window(-64, 63), boundary)
        worst = max(worst, tf.L.unitarity_defect(), tf.M.unitarity_defect(), tf.W.unitarity_defect())
    passed = worst <= 1e-12
    return _result("truncated-unitarity", settings, passed, f"max ‖UU† − 1‖ {worst:.2e}", max_defect=worst)


def check_velocity_symmetry(settings: ValidationSettings) -> CheckResult:
    """LM, ML and T⁻¹MLT have matching finite-time velocity proxies."""
    if settings.full:
        site_window, t_grid = (-220, 220), [50, 100, 150, 200]
    else:
        site_window, t_grid = (-110, 110), [25, 50, 75, 100]
    coins = make_homogeneous(INV_SQRT2)
    window = cmv_window(*site_window)
    factors = build_truncated(SplitStepWalk(coins, coins).factors(), window)
    family = [embed_state(member.state, window) for member in default_family()]
    report = cmv_ordering_check(factors, t_grid, family)
    return _result(
        "velocity-symmetry", settings, report.passed,
        f"max discrepancy {report.max_discrepancy:.3e} (band {report.tolerance})",
        proxies=report.proxies, max_discrepancy=report.max_discrepancy,
    )


def check_q_bound_witness(settings: ValidationSettings) -> CheckResult:
    """
    ‖(Q − Q̃_N)ϕ‖ ≤ M‖ϕ‖ + (c_N + ε)‖Qϕ‖ for random ϕ, with M read off the block
    endpoints; the same check with M = 0 must fail on the arithmetic subsequence.
    """
    rng = np.random.default_rng([settings.seed, 11])
    window = cmv_window(-64, 63)
    arithmetic = SparseSubsequence.arithmetic(5, 64)
    witnesses = [
        q_bound_witness(arithmetic, 2, window, rng),
        q_bound_witness(SparseSubsequence.geometric(2, 40), 2, window, rng),
    ]
    undersized = q_bound_witness(arithmetic, 2, window, rng, m_const=0.0)
    passed = all(w.holds for w in witnesses) and not undersized.holds
    worst = max(w.max_violation for w in witnesses)
    return _result(
        "q-bound-witness", settings, passed,
        f"max relative violation {worst:.2e}, M = 0 violation {undersized.max_violation:.2e}",
        max_violation=worst, m_const=[w.m_const for w in witnesses],
        bad_blocks=[w.bad_blocks for w in witnesses], undersized_violation=undersized.max_violation,
    )


def _overlay_walk(seq: SparseSubsequence, kind: DecayKind, power: float) -> Tuple[SplitStepWalk, Dict[int, Any]]:
    c1 = HomogeneousCoins(HADAMARD_COIN)
    c2 = SparseOverlayCoins(SparseOverlaySpec(HADAMARD_COIN, seq, decay_profile(kind, 1.0, power)))
    return SplitStepWalk(c1, c2), {1: c1, 2: c2}


def check_uniform_gap_case(settings: ValidationSettings) -> CheckResult:
    """
    j_m = 5m with |a(j_m)| = 1/(1+|m|): the bound is small and the walk is slow.
    v̂(t) is compared with the bound over the N whose interfaces lie within t sites.
    """
    horizon = 10**4 if settings.full else 2000
    t_max = 2000 if settings.full else 1000
    seq = SparseSubsequence.arithmetic(5, horizon)
    walk, coins = _overlay_walk(seq, DecayKind.INDEX_POWER, 1.0)
    report = evaluate_bounds(seq, coins)
    reach = bound_within_reach(seq, coins, t_max)
    estimate = velocity_proxy(walk, default_family(), [t_max])
    passed = (
        report.best <= 0.05
        and reach.best <= 0.05
        and report.primary_case == TheoremCase.UNIFORM_GAPS
        and estimate.proxy <= reach.best + 0.02
    )
    return _result(
        "uniform-gap-case", settings, passed,
        f"bound {report.best:.4g} at horizon {horizon}, {reach.best:.4g} with N ≤ {reach.max_N}, "
        f"case {report.primary_case}, v̂({t_max}) = {estimate.proxy:.4g}",
        bound=report.best, bound_within_reach=reach.best, max_N=reach.max_N,
        vhat=estimate.proxy, case=str(report.primary_case),
    )


def check_gap_weighted_case(settings: ValidationSettings) -> CheckResult:
    """j_m = sign(m)m² with |a(j_m)| = 1/(1+j_m²)."""
    t_max = 2000 if settings.full else 1000
    seq = SparseSubsequence.power(2.0, 300)
    walk, coins = _overlay_walk(seq, DecayKind.SITE_POWER, 2.0)
    bound = gap_weighted_bound(seq, coins, 2)
    cases = classify_cases(seq, coins).cases
    estimate = velocity_proxy(walk, default_family(), [t_max])
    passed = bound <= 0.05 and TheoremCase.GAP_WEIGHTED in cases and estimate.proxy <= 0.1
    return _result(
        "gap-weighted-case", settings, passed,
        f"gap-weighted bound {bound:.3g}, cases {[str(c) for c in cases]}, v̂({t_max}) = {estimate.proxy:.4g}",
        bound=bound, vhat=estimate.proxy,
    )


def _seed_block(settings: ValidationSettings, count: int) -> List[int]:
    return [settings.seed * 1000 + i for i in range(count)]


def check_random_power_law(settings: ValidationSettings) -> CheckResult:
    """α = 1/2: the lower tail, the density of good indices and the gap envelope."""
    seeds = _seed_block(settings, 100 if settings.full else 20)
    n_max = 10**5 if settings.full else 10**4
    diag = scan_diagnostics(TailDistribution.power_law(0.5), seeds, n_max)
    ecdf_ok = all(c.ok for c in diag.ecdf)
    counts_ok = all(
        abs(median - 2.0 * math.sqrt(n)) <= 0.25 * 2.0 * math.sqrt(n) for n, median in diag.good_count_medians.items()
    )
    envelope_ok = diag.envelope_pass_fraction >= 0.95
    passed = ecdf_ok and counts_ok and envelope_ok
    return _result(
        "random-alpha-half", settings, passed,
        f"ecdf {ecdf_ok}, counts {diag.good_count_medians}, envelope pass fraction {diag.envelope_pass_fraction:.3f}",
        **diag.summary(),
    )


def check_random_uniform_control(settings: ValidationSettings) -> CheckResult:
    """α = 1: dyadic blocks are empty about half the time and most seeds are inconclusive."""
    seeds = _seed_block(settings, 100 if settings.full else 20)
    dist = TailDistribution.uniform()
    diag = scan_diagnostics(dist, seeds, 2**16, dyadic_scales=range(5, 16))
    fraction = diag.dyadic_empty_fraction
    experiment = random_zero_velocity_experiment(dist, seeds[:5], t_max=200, n_max=10**4)
    flagged = sum(row.no_conclusion for row in experiment.rows)
    passed = fraction is not None and 0.35 <= fraction <= 0.65 and flagged >= 4
    return _result(
        "random-uniform-control", settings, passed,
        f"empty dyadic fraction {fraction}, {flagged}/5 seeds inconclusive",
        empty_fraction=fraction, inconclusive=flagged,
    )


def check_perfect_reflector(settings: ValidationSettings) -> CheckResult:
    """Atom of mass 1 at zero: every site reflects and v̂(t)·t ≤ 1."""
    dist = TailDistribution.atom(1.0)
    walk = SplitStepWalk(sample_coins(dist, settings.seed, 1), sample_coins(dist, settings.seed, 2))
    estimate = velocity_proxy(walk, delta_family(), [100, 500, 1000])
    worst = max(s.vhat * s.t for s in estimate.samples)
    passed = worst <= 1.0 + 1e-12
    return _result("perfect-reflector", settings, passed, f"max v̂·t = {worst:.6g}", max_displacement=worst)


def check_barrier_no_conclusion(settings: ValidationSettings) -> CheckResult:
    """Barriers at 2^{m!} with η = 1/2 are reported as inconclusive, with diverging L_{m+1}|a(L_m)|."""
    diag = sparse_barrier_diagnostics(DamanikSpec(0.5, factorial_barriers(5)))
    passed = diag.case == TheoremCase.NO_CONCLUSION and diag.diverging
    return _result("barrier-no-conclusion", settings, passed, f"growth logs {diag.growth_log}", growth_log=diag.growth_log)


CheckFunction = Callable[[ValidationSettings], CheckResult]

VALIDATION_CHECKS: Dict[str, CheckFunction] = {
    "split-vs-cmv": check_split_matches_cmv,
    "mirror-identities": check_mirror_identities,
    "reflector-trapping": check_reflector_trapping,
    "a-priori-speed": check_a_priori_speed,
    "commutator-formula": check_commutator_formula,
    "chebyshev": check_chebyshev,
    "relative-bound": check_relative_bound,
    "dense-vs-engine": check_dense_matches_engine,
    "truncated-unitarity": check_truncated_unitarity,
    "velocity-symmetry": check_velocity_symmetry,
    "q-bound-witness": check_q_bound_witness,
    "uniform-gap-case": check_uniform_gap_case,
    "gap-weighted-case": check_gap_weighted_case,
    "random-alpha-half": check_random_power_law,
    "random-uniform-control": check_random_uniform_control,
    "perfect-reflector": check_perfect_reflector,
    "barrier-no-conclusion": check_barrier_no_conclusion,
}


def _run_check(name: str, check: CheckFunction, settings: ValidationSettings) -> CheckResult:
    try:
        result = check(settings)
    except WalkLabError as e:
        logger.error(f"Check {name} raised: {e}")
        return CheckResult(name=name, passed=False, seed=settings.seed, detail=f"raised {type(e).__name__}: {e}")
    level = "INFO" if result.passed else "ERROR"
    logger.log(level, f"[{name}] seed {settings.seed}: {'pass' if result.passed else 'FAIL'} - {result.detail}")
    return result


def run_validation(
    seeds: Sequence[int] = (0,),
    full: bool = False,
    threads: int = 1,
    checks: Optional[Sequence[str]] = None,
    overrides: Optional[Dict[str, CheckFunction]] = None,
) -> ValidationReport:
    """
    Runs the named checks (all by default) once per seed. `overrides`
    replaces individual checks, e.g. with a version bound to a broken stepper.
    """
    registry = {**VALIDATION_CHECKS, **(overrides or {})}
    names = list(checks) if checks else list(registry)
    unknown = [n for n in names if n not in registry]
    if unknown:
        raise InvalidArgumentError(f"Unknown validation checks: {unknown}. Known: {sorted(registry)}")
    order = {name: i for i, name in enumerate(names)}
    results: List[CheckResult] = []
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        futures = [
            executor.submit(_run_check, name, registry[name], ValidationSettings(seed=seed, full=full))
            for seed in seeds
            for name in names
        ]
        for future in as_completed(futures):
            results.append(future.result())
    results.sort(key=lambda r: (order[r.name], r.seed))
    report = ValidationReport(results)
    logger.info(f"Validation: {len(results) - len(report.failures)}/{len(results)} checks passed")
    return report
