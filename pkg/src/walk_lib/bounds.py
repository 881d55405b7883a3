"""
Closed-form velocity bounds evaluated on materialized subsequences.

All suprema and limsups are over finitely many materialized terms. A limsup is
estimated as the maximum over the last half of the terms on a side, and every
report carries the horizon it was computed at.

Interfaces: the interface i is the site j_i, where the M block of C₂(j_i)
couples the last CMV index of ℋ_{i−1} with the first index of ℋ_i. A block
scalar operator D commutes with M except across interfaces, and
‖[D, M]‖ = max_i |D_i − D_{i−1}|·|a₂(j_i)|.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from walk_lib.coins import CoinSequence, DamanikSpec
from walk_lib.constants import DEFAULT_N_RANGE, MIN_BLOCKS_PER_SIDE, Q_DIVERGENCE_THRESHOLD
from walk_lib.enums import ModifiedPositionKind, TheoremCase
from walk_lib.errors import InsufficientDataError, InvalidArgumentError, InvalidParameterError, NotInJError
from walk_lib.helpers import is_tail_bounded, is_tail_decreasing, tail_max
from walk_lib.subsequence import SparseSubsequence

LIMSUP_ESTIMATOR = "max over the last half of materialized indices"


@dataclass
class GapStats:
    q_plus: float
    q_minus: float
    horizon_plus: int
    horizon_minus: int
    estimator: str = LIMSUP_ESTIMATOR
    q_plus_trend_decreasing: bool = False
    q_minus_trend_decreasing: bool = False

    @property
    def q(self) -> float:
        return max(self.q_plus, self.q_minus)


def _ratios(seq: SparseSubsequence) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """g_m/|j_m| for m = 1, ..., m_max − 1 and for m = −1, ..., m_min + 1."""
    plus_gaps = seq.gaps_plus()[1:].astype(np.float64)
    plus_sites = seq.j(np.arange(1, seq.m_max, dtype=np.int64)).astype(np.float64)
    minus_gaps = seq.gaps_minus().astype(np.float64)
    minus_sites = np.abs(seq.j(-np.arange(1, seq.horizon_minus, dtype=np.int64))).astype(np.float64)
    return plus_gaps / plus_sites, minus_gaps / minus_sites


def gap_stats(seq: SparseSubsequence) -> GapStats:
    if seq.horizon_plus < MIN_BLOCKS_PER_SIDE or seq.horizon_minus < MIN_BLOCKS_PER_SIDE:
        raise InsufficientDataError(
            f"Gap statistics need ≥ {MIN_BLOCKS_PER_SIDE} blocks per side, "
            f"got {seq.horizon_plus} and {seq.horizon_minus}"
        )
    plus, minus = _ratios(seq)
    stats = GapStats(
        q_plus=tail_max(plus),
        q_minus=tail_max(minus),
        horizon_plus=seq.horizon_plus,
        horizon_minus=seq.horizon_minus,
        q_plus_trend_decreasing=is_tail_decreasing(plus),
        q_minus_trend_decreasing=is_tail_decreasing(minus),
    )
    if not math.isfinite(stats.q) or stats.q > Q_DIVERGENCE_THRESHOLD:
        raise NotInJError(f"Relative gap statistic q = {stats.q} is not finite at horizon {seq.horizon}", stats.q)
    return stats


def effective_q(seq: SparseSubsequence) -> float:
    """The structural q of a generator family, otherwise the tail estimate."""
    if seq.structural_q is not None:
        return seq.structural_q
    return gap_stats(seq).q


def relative_bound_from_q(q: float, N: int) -> float:
    """c_N = 1 − (1+q)^{−(N+1)}."""
    if N < 0:
        raise InvalidParameterError(f"N must be ≥ 0, got {N}")
    if q < 0.0:
        raise InvalidParameterError(f"q must be ≥ 0, got {q}")
    return 1.0 - (1.0 + q) ** (-(N + 1))


def relative_bound_constant(seq: SparseSubsequence, N: int) -> float:
    return relative_bound_from_q(effective_q(seq), N)


def _j_or_nan(seq: SparseSubsequence, k: NDArray[np.int64]) -> NDArray[np.float64]:
    idx = np.asarray(k, dtype=np.int64) - seq.m_min
    out = np.full(idx.shape, np.nan)
    ok = (idx >= 0) & (idx < len(seq.sites))
    out[ok] = seq.sites[idx[ok]]
    return out


@dataclass(frozen=True)
class ModifiedPosition:
    """
    Block-scalar surrogate for Q. TILDE assigns j_{m−N} to blocks m ≥ N and
    j_{m+N} to blocks m ≤ −N; HAT assigns j_{m+1} and |j_m|. Both vanish on
    the blocks in between. HAT requires N ≥ 1.
    """
    kind: ModifiedPositionKind
    N: int
    seq: SparseSubsequence

    def __post_init__(self) -> None:
        if self.kind == ModifiedPositionKind.TILDE and self.N < 0:
            raise InvalidParameterError(f"N must be ≥ 0, got {self.N}")
        if self.kind == ModifiedPositionKind.HAT and self.N < 1:
            raise InvalidParameterError(f"The hat operator needs N ≥ 1, got {self.N}")

    def block_values(self, m: NDArray[np.int64]) -> NDArray[np.float64]:
        """Scalar on each block ℋ_m; NaN where it depends on unmaterialized sites."""
        m = np.asarray(m, dtype=np.int64)
        out = np.zeros(m.shape, dtype=np.float64)
        pos = m >= self.N
        neg = m <= -self.N
        if self.kind == ModifiedPositionKind.TILDE:
            out[pos] = _j_or_nan(self.seq, m[pos] - self.N)
            out[neg] = _j_or_nan(self.seq, m[neg] + self.N)
        else:
            out[pos] = _j_or_nan(self.seq, m[pos] + 1)
            out[neg] = np.abs(_j_or_nan(self.seq, m[neg]))
        return out

    def cmv_diagonal(self, n_lo: int, n_hi: int) -> NDArray[np.float64]:
        blocks = self.seq.block_of_cmv(np.arange(n_lo, n_hi + 1, dtype=np.int64))
        values = self.block_values(blocks)
        if np.any(np.isnan(values)):
            raise InvalidArgumentError(f"{self.kind} operator is not materialized on [{n_lo}, {n_hi}]")
        return values


def interface_weights(op: ModifiedPosition) -> Tuple[NDArray[np.int64], NDArray[np.float64]]:
    """|D_i − D_{i−1}| for every interface i whose two neighbouring block values are materialized."""
    i = np.arange(op.seq.m_min, op.seq.m_max + 1, dtype=np.int64)
    jumps = np.abs(op.block_values(i) - op.block_values(i - 1))
    ok = np.isfinite(jumps)
    return i[ok], jumps[ok]


def commutator_terms(
    seq: SparseSubsequence,
    coin: CoinSequence,
    kind: ModifiedPositionKind,
    N: int,
    site_window: Optional[Tuple[int, int]] = None,
) -> Tuple[NDArray[np.int64], NDArray[np.float64]]:
    """Per-interface norms |D_i − D_{i−1}|·|a(j_i)|, optionally restricted to j_i inside a site window."""
    i, weights = interface_weights(ModifiedPosition(kind, N, seq))
    sites = seq.j(i)
    if site_window is not None:
        inside = (sites >= site_window[0]) & (sites <= site_window[1])
        i, weights, sites = i[inside], weights[inside], sites[inside]
    return i, weights * coin.transmission_moduli(sites)


def commutator_norm_formula(
    seq: SparseSubsequence,
    coin: CoinSequence,
    kind: ModifiedPositionKind,
    N: int,
    site_window: Optional[Tuple[int, int]] = None,
) -> float:
    """‖[D, M]‖ for D = Q̃_N or Q̂_N, with M built from `coin`."""
    _, terms = commutator_terms(seq, coin, kind, N, site_window)
    if len(terms) == 0:
        return 0.0
    return float(terms.max())


def _side_sup(i: NDArray[np.int64], terms: NDArray[np.float64]) -> Tuple[float, Optional[int]]:
    if len(terms) == 0:
        return 0.0, None
    k = int(np.argmax(terms))
    return float(terms[k]), int(i[k])


def f_plus_detail(seq: SparseSubsequence, coin: CoinSequence, N: int) -> Tuple[float, Optional[int]]:
    """sup_{i ≥ N+1} g_{i−1−N}·|a(j_i)| and the interface attaining it."""
    i, terms = commutator_terms(seq, coin, ModifiedPositionKind.TILDE, N)
    keep = i >= N + 1
    return _side_sup(i[keep], terms[keep])


def f_minus_detail(seq: SparseSubsequence, coin: CoinSequence, N: int) -> Tuple[float, Optional[int]]:
    """sup_{i ≤ −N} (j_{i+N} − j_{i+N−1})·|a(j_i)| and the interface attaining it."""
    i, terms = commutator_terms(seq, coin, ModifiedPositionKind.TILDE, N)
    keep = i <= -N
    return _side_sup(i[keep], terms[keep])


def f_plus(seq: SparseSubsequence, coin: CoinSequence, N: int) -> float:
    return f_plus_detail(seq, coin, N)[0]


def f_minus(seq: SparseSubsequence, coin: CoinSequence, N: int) -> float:
    return f_minus_detail(seq, coin, N)[0]


@dataclass
class BoundEntry:
    k: int
    N: int
    value: float
    fk_plus: float
    fk_minus: float
    q: float
    horizon: int
    subsequence: str
    tail_converged: bool

    def row(self, best: float) -> dict:
        return {
            "k": self.k,
            "N": self.N,
            "value": self.value,
            "fk_plus": self.fk_plus,
            "fk_minus": self.fk_minus,
            "q": self.q,
            "horizon": self.horizon,
            "best": best,
        }


@dataclass
class BoundReport:
    entries: List[BoundEntry] = field(default_factory=list)
    best: float = math.inf
    best_entry: Optional[BoundEntry] = None
    horizon: int = 0
    estimator: str = LIMSUP_ESTIMATOR
    max_N: Optional[int] = None
    gap_weighted: Optional[float] = None
    uniform_gap: Optional[float] = None
    a_priori: Optional[float] = None
    cases: List[TheoremCase] = field(default_factory=list)
    primary_case: TheoremCase = TheoremCase.NO_CONCLUSION
    not_in_j: List[str] = field(default_factory=list)
    notes: Dict[str, object] = field(default_factory=dict)

    def rows(self) -> List[dict]:
        return [entry.row(self.best) for entry in self.entries]

    def summary(self) -> dict:
        return {
            "best": self.best if math.isfinite(self.best) else None,
            "best_k": self.best_entry.k if self.best_entry else None,
            "best_N": self.best_entry.N if self.best_entry else None,
            "tail_converged": self.best_entry.tail_converged if self.best_entry else None,
            "horizon": self.horizon,
            "estimator": self.estimator,
            "max_N": self.max_N,
            "gap_weighted": self.gap_weighted,
            "uniform_gap": self.uniform_gap,
            "a_priori": self.a_priori,
            "cases": [str(c) for c in self.cases],
            "primary_case": str(self.primary_case),
            "not_in_j": self.not_in_j,
            **self.notes,
        }


def reachable_interfaces(seq: SparseSubsequence, t: int) -> int:
    """Largest N such that the interfaces ±1, ..., ±N lie within t sites of the origin."""
    if t < 0:
        raise InvalidParameterError(f"t must be ≥ 0, got {t}")
    sites = seq.sites
    plus = int(np.count_nonzero((sites > 0) & (sites <= t)))
    minus = int(np.count_nonzero((sites < 0) & (sites >= -t)))
    return min(plus, minus)


def _n_values(seq: SparseSubsequence, q: float, n_range: Sequence[int], max_N: Optional[int] = None) -> List[int]:
    limit = min(seq.horizon_plus, seq.horizon_minus) // 2
    values = {int(N) for N in n_range if 0 <= N <= limit}
    dropped = [N for N in n_range if N > limit]
    if dropped:
        logger.warning(f"N values {dropped} exceed half the horizon {limit} and were skipped")
    if max_N is not None:
        limit = min(limit, max_N)
        values = {N for N in values if N <= max_N}
    if q == 0.0:
        N = 16
        while N <= limit:
            values.add(N)
            N *= 2
    return sorted(values)


def _is_converged(value: float, arg: Optional[int], side_extent: int) -> bool:
    """The supremum is attained away from the truncation edge."""
    if value == 0.0 or arg is None:
        return True
    return abs(arg) <= (3 * side_extent) // 4


def general_velocity_bound(
    candidates: Mapping[int, Sequence[SparseSubsequence]],
    coins: Mapping[int, CoinSequence],
    n_range: Sequence[int] = DEFAULT_N_RANGE,
    max_N: Optional[int] = None,
) -> BoundReport:
    """
    min over k, supplied subsequences and N of (1+q)^{N+1}·max{f_k⁺(N), f_k⁻(N)}.
    `max_N` caps N, e.g. at the interfaces a walk can reach in a given time.
    Raises NotInJError when a subsequence has a divergent q estimate.
    """
    report = BoundReport(max_N=max_N)
    for k, sequences in sorted(candidates.items()):
        coin = coins[k]
        for seq in sequences:
            q = effective_q(seq)
            report.horizon = max(report.horizon, seq.horizon)
            for N in _n_values(seq, q, n_range, max_N):
                plus, plus_arg = f_plus_detail(seq, coin, N)
                minus, minus_arg = f_minus_detail(seq, coin, N)
                if plus >= minus:
                    converged = _is_converged(plus, plus_arg, seq.horizon_plus)
                else:
                    converged = _is_converged(minus, minus_arg, seq.horizon_minus)
                value = (1.0 + q) ** (N + 1) * max(plus, minus)
                entry = BoundEntry(k, N, value, plus, minus, q, seq.horizon, str(seq.kind), converged)
                report.entries.append(entry)
                logger.debug(f"k={k} N={N}: bound {value:.6g} (f+={plus:.3g}, f-={minus:.3g}, q={q:.3g})")
                if value < report.best:
                    report.best, report.best_entry = value, entry
    if report.best_entry is not None and not report.best_entry.tail_converged:
        logger.warning("The best bound is attained at the edge of the materialized horizon")
    return report


def bound_within_reach(
    seq: SparseSubsequence,
    coins: Mapping[int, CoinSequence],
    t: int,
    n_range: Sequence[int] = DEFAULT_N_RANGE,
) -> BoundReport:
    """The general bound over N ≤ reachable_interfaces(seq, t), comparable with v̂(t)."""
    return general_velocity_bound({k: [seq] for k in coins}, coins, n_range, reachable_interfaces(seq, t))


def _a_moduli(
seq: SparseSubsequence, coin: CoinSequence, m: NDArray[np.int64]) -> NDArray[np.float64]:
    return coin.transmission_moduli(seq.j(m))


def gap_weighted_bound(seq: SparseSubsequence, coins: Mapping[int, CoinSequence], k: int = 2) -> float:
    """max{limsup j_{m+1}|a_k(j_m)|, limsup |j_{−(m+1)}|·|a_k(j_{−m})|}."""
    coin = coins[k]
    m_plus = np.arange(1, seq.m_max, dtype=np.int64)
    plus = seq.j(m_plus + 1).astype(np.float64) * _a_moduli(seq, coin, m_plus)
    m_minus = np.arange(1, seq.horizon_minus, dtype=np.int64)
    minus = np.abs(seq.j(-(m_minus + 1))).astype(np.float64) * _a_moduli(seq, coin, -m_minus)
    return max(tail_max(plus), tail_max(minus))


def uniform_gap_bound(seq: SparseSubsequence, coins: Mapping[int, CoinSequence], k: int = 2) -> float:
    """(sup_m g_m)·max of the two tail limsups of |a_k(j_m)|."""
    coin = coins[k]
    sup_gap = float(max(seq.gaps_plus().max(initial=0), seq.gaps_minus().max(initial=0)))
    plus = _a_moduli(seq, coin, np.arange(1, seq.m_max + 1, dtype=np.int64))
    minus = _a_moduli(seq, coin, -np.arange(1, seq.horizon_minus + 1, dtype=np.int64))
    return sup_gap * max(tail_max(plus), tail_max(minus))


def a_priori_bound(coins: Mapping[int, CoinSequence], site_horizon: int) -> float:
    """min_k max(limsup_{n→+∞}|a_k(n)|, limsup_{n→−∞}|a_k(n)|) over sites up to `site_horizon`."""
    if site_horizon < 2:
        raise InvalidParameterError(f"Site horizon must be ≥ 2, got {site_horizon}")
    sites = np.arange(site_horizon // 2, site_horizon + 1, dtype=np.int64)
    best = math.inf
    for coin in coins.values():
        value = max(float(coin.transmission_moduli(sites).max()), float(coin.transmission_moduli(-sites).max()))
        best = min(best, value)
    return best


@dataclass
class TailShiftSweep:
    values: Dict[int, float]
    best: float
    best_shift: int


def tail_shift_sweep(
    seq: SparseSubsequence,
    coins: Mapping[int, CoinSequence],
    k: int = 2,
    shifts: Optional[Sequence[int]] = None,
) -> TailShiftSweep:
    """
    N = 1 bound along the shifted subsequences j_{m+M}:
    (1+q)²·max{sup_{i ≥ M+1} g_{i−2}|a(j_i)|, sup_{i ≤ −(M+1)} (j_{i+2} − j_{i+1})|a(j_i)|}, infimum over M ≥ 1.
    """
    coin = coins[k]
    q = effective_q(seq)
    if shifts is None:
        shifts = range(1, max(2, min(seq.horizon_plus, seq.horizon_minus) // 2))
    i = seq.indices
    moduli = _a_moduli(seq, coin, i)
    plus_w = _j_or_nan(seq, i - 1) - _j_or_nan(seq, i - 2)
    minus_w = _j_or_nan(seq, i + 2) - _j_or_nan(seq, i + 1)
    values: Dict[int, float] = {}
    for M in shifts:
        if M < 1:
            raise InvalidParameterError(f"Shifts must be ≥ 1, got {M}")
        plus = plus_w * moduli
        minus = minus_w * moduli
        p = plus[(i >= M + 1) & np.isfinite(plus)]
        n = minus[(i <= -(M + 1)) & np.isfinite(minus)]
        values[int(M)] = (1.0 + q) ** 2 * max(p.max(initial=0.0), n.max(initial=0.0))
    best_shift = min(values, key=values.get)
    return TailShiftSweep(values=values, best=values[best_shift], best_shift=best_shift)


@dataclass
class CaseClassification:
    cases: List[TheoremCase]
    primary: TheoremCase
    k: Optional[int]


def _side_profiles(seq: SparseSubsequence, coin: CoinSequence) -> List[Dict[str, NDArray[np.float64]]]:
    profiles = []
    m = np.arange(1, seq.m_max, dtype=np.int64)
    gaps = seq.gaps_plus()[1:].astype(np.float64)
    profiles.append((m, gaps))
    m = -np.arange(1, seq.horizon_minus, dtype=np.int64)
    profiles.append((m, seq.gaps_minus().astype(np.float64)))
    out = []
    for m, gaps in profiles:
        sites = np.abs(seq.j(m)).astype(np.float64)
        moduli = _a_moduli(seq, coin, m)
        out.append({"gaps": gaps, "sites": sites, "moduli": moduli})
    return out


def classify_cases(seq: SparseSubsequence, coins: Mapping[int, CoinSequence]) -> CaseClassification:
    """
    Which zero-velocity criteria the materialized data supports, checked per
    coin index k on both tails:
      (i)   gaps tail-bounded and |a(j_m)| decreasing,
      (ii)  g_m/|j_m| decreasing and |j_m|·|a(j_m)| bounded,
      (iii) max{|j_m|, g_m}·|a(j_m)| decreasing,
      relative gaps positive: q > 0 and |j_m|·|a(j_m)| decreasing.
    """
    try:
        q = effective_q(seq)
    except (InsufficientDataError, NotInJError) as e:
        logger.warning(f"Case classification skipped: {e}")
        return CaseClassification([TheoremCase.NO_CONCLUSION], TheoremCase.NO_CONCLUSION, None)

    order = [
        TheoremCase.UNIFORM_GAPS,
        TheoremCase.SUBLINEAR_GAPS,
        TheoremCase.GAP_WEIGHTED,
        TheoremCase.RELATIVE_GAPS_POSITIVE,
    ]
    found: Dict[TheoremCase, int] = {}
    for k, coin in sorted(coins.items()):
        sides = _side_profiles(seq, coin)
        checks = {
            TheoremCase.UNIFORM_GAPS: all(
                is_tail_bounded(s["gaps"]) and is_tail_decreasing(s["moduli"]) for s in sides
            ),
            TheoremCase.SUBLINEAR_GAPS: all(
                is_tail_decreasing(s["gaps"] / s["sites"]) and is_tail_bounded(s["sites"] * s["moduli"])
                for s in sides
            ),
            TheoremCase.GAP_WEIGHTED: all(
                is_tail_decreasing(np.maximum(s["sites"], s["gaps"]) * s["moduli"]) for s in sides
            ),
            TheoremCase.RELATIVE_GAPS_POSITIVE: q > 0.0 and all(
                is_tail_decreasing(s["sites"] * s["moduli"]) for s in sides
            ),
        }
        for case in order:
            if checks[case] and case not in found:
                found[case] = k
    cases = [case for case in order if case in found]
    primary = next(
        (case for case in order[:3] if case in found),
        TheoremCase.RELATIVE_GAPS_POSITIVE if TheoremCase.RELATIVE_GAPS_POSITIVE in found else TheoremCase.NO_CONCLUSION,
    )
    if not cases:
        cases = [TheoremCase.NO_CONCLUSION]
    return CaseClassification(cases, primary, found.get(primary))


@dataclass
class BarrierDiagnostics:
    """
    Growth of L_{m+1}·|a(L_m)| for sparse barrier models, in natural logs.
    These are the gap-weighted terms along the barrier sites; the bounds only
    conclude when they fall toward zero.
    """
    growth_log: List[float]
    diverging: bool
    vanishing: bool
    gap_weighted_log: Optional[float]
    case: TheoremCase

    @property
    def gap_weighted(self) -> Optional[float]:
        if self.gap_weighted_log is None:
            return None
        try:
            return math.exp(self.gap_weighted_log)
        except OverflowError:
            return math.inf


def sparse_barrier_diagnostics(spec: DamanikSpec) -> BarrierDiagnostics:
    growth = spec.growth_log()
    increasing = len(growth) >= 2 and all(b > a for a, b in zip(growth, growth[1:]))
    decreasing = len(growth) >= 2 and all(b < a for a, b in zip(growth, growth[1:]))
    diverging = increasing and growth[-1] > 0.0
    vanishing = decreasing and growth[-1] < 0.0
    gap_log = tail_max(np.array(growth)) if growth else None
    case = TheoremCase.GAP_WEIGHTED if vanishing else TheoremCase.NO_CONCLUSION
    return BarrierDiagnostics(
        growth_log=growth, diverging=diverging, vanishing=vanishing, gap_weighted_log=gap_log, case=case
    )


def evaluate_bounds(
    seq: SparseSubsequence,
    coins: Mapping[int, CoinSequence],
    n_range: Sequence[int] = DEFAULT_N_RANGE,
    site_horizon: Optional[int] = None,
) -> BoundReport:
    """Every bound for one subsequence; a divergent q is recorded instead of raised."""
    try:
        report = general_velocity_bound({k: [seq] for k in coins}, coins, n_range)
    except (NotInJError, InsufficientDataError) as e:
        logger.warning(f"General bound not evaluated: {e}")
        report = BoundReport(horizon=seq.horizon, not_in_j=[str(e)])
    report.gap_weighted = min(gap_weighted_bound(seq, coins, k) for k in coins)
    report.uniform_gap = min(uniform_gap_bound(seq, coins, k) for k in coins)
    report.a_priori = a_priori_bound(coins, site_horizon or max(2, int(max(abs(seq.sites[0]), seq.sites[-1]))))
    classification = classify_cases(seq, coins)
    report.cases, report.primary_case = classification.cases, classification.primary
    report.notes["relative_bound_constants"] = (
        {N: relative_bound_from_q(report.best_entry.q, N) for N in n_range} if report.best_entry else {}
    )
    return report


