"""
i.i.d. random coins, lower-tail distributions and the constructive extraction
of good indices k with |a(k)| ≤ 1/k.

Every Monte Carlo quantity here is seeded. Coins for seed s are drawn from
numpy's PCG64 through `SeedSequence([s, stream, block])`, so a seed fully
determines the coins, the scans and the reports built from them.
"""
from __future__ import annotations

import math
import statistics
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from walk_lib.bounds import general_velocity_bound
from walk_lib.coins import CoinSequence, RandomCoins
from walk_lib.constants import (
    COIN_STREAMS,
    DEFAULT_N_RANGE,
    ECDF_GRID,
    MIN_GOOD_INDICES,
    RATIO_TAIL_NO_CONCLUSION,
)
from walk_lib.enums import DistributionKind
from walk_lib.errors import InsufficientDataError, InvalidParameterError, NotInJError
from walk_lib.helpers import is_tail_decreasing, tail_max
from walk_lib.observables import FamilyMember, delta_family, velocity_proxy
from walk_lib.subsequence import SparseSubsequence
from walk_lib.walk_engine import SplitStepWalk

GENERATOR_ID = "numpy.random.PCG64/SeedSequence"


@dataclass(frozen=True)
class TailDistribution:
    """
    Law of |a(n)|. POWER_LAW has F(x) = x^α on (0, 1); UNIFORM draws a from
    [−1, 1] so F(x) = x; ATOM puts mass `atom_mass` at 0 and is POWER_LAW
    otherwise. `c` and `x0` describe the lower-tail condition F(x) ≥ c·x^α on
    (0, x0).
    """
    kind: DistributionKind
    alpha: float = 0.5
    c: float = 1.0
    x0: float = 1.0
    atom_mass: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise InvalidParameterError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.c <= 0.0:
            raise InvalidParameterError(f"c must be positive, got {self.c}")
        if self.x0 <= 0.0:
            raise InvalidParameterError(f"x0 must be positive, got {self.x0}")
        if not 0.0 <= self.atom_mass <= 1.0:
            raise InvalidParameterError(f"Atom mass must lie in [0, 1], got {self.atom_mass}")

    @classmethod
    def power_law(cls, alpha: float) -> TailDistribution:
        return cls(DistributionKind.POWER_LAW, alpha=alpha)

    @classmethod
    def uniform(cls) -> TailDistribution:
        return cls(DistributionKind.UNIFORM, alpha=1.0)

    @classmethod
    def atom(cls, mass: float, alpha: float = 0.5) -> TailDistribution:
        return cls(DistributionKind.ATOM, alpha=alpha, atom_mass=mass)

    @property
    def label(self) -> str:
        if self.kind == DistributionKind.ATOM:
            return f"{self.kind}(alpha={self.alpha}, mass={self.atom_mass})"
        return f"{self.kind}(alpha={self.alpha})"

    def sample(self, rng: np.random.Generator, size: int) -> NDArray[np.float64]:
        """Transmission entries a(n); only UNIFORM produces negative values."""
        if self.kind == DistributionKind.UNIFORM:
            return 2.0 * rng.random(size) - 1.0
        values = rng.random(size) ** (1.0 / self.alpha)
        if self.kind == DistributionKind.ATOM:
            values[rng.random(size) < self.atom_mass] = 0.0
        return values

    def cdf(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        """ℙ(|a| ≤ x) for x in [0, 1]."""
        x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
        if self.kind == DistributionKind.UNIFORM:
            return x
        power = x**self.alpha
        if self.kind == DistributionKind.ATOM:
            return self.atom_mass + (1.0 - self.atom_mass) * power
        return power


def sample_coins(
    dist: TailDistribution,
    seed: int,
    stream: int = 0,
    site_range: Optional[Tuple[int, int]] = None,
) -> RandomCoins:
    coins = RandomCoins(dist.sample, seed=seed, stream=stream, label=dist.label)
    if site_range is not None:
        coins.transmission(np.arange(site_range[0], site_range[1] + 1, dtype=np.int64))
    return coins


@dataclass
class EcdfCheck:
    x: float
    ecdf: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.ecdf >= self.bound


def ecdf_domination(
    moduli: NDArray[np.float64],
    dist: TailDistribution,
    grid: Sequence[float] = ECDF_GRID,
    factor: float = 0.95,
) -> List[EcdfCheck]:
    """Empirical CDF of |a| against factor·c·x^α at the grid points."""
    moduli = np.sort(np.abs(np.asarray(moduli, dtype=np.float64)))
    checks = []
    for x in grid:
        ecdf = float(np.searchsorted(moduli, x, side="right")) / len(moduli)
        checks.append(EcdfCheck(x=x, ecdf=ecdf, bound=factor * dist.c * x**dist.alpha))
    return checks


@dataclass
class SideScan:
    good: NDArray[np.int64]

    @property
    def count(self) -> int:
        return len(self.good)

    @property
    def insufficient(self) -> bool:
        return self.count < MIN_GOOD_INDICES

    def gaps(self) -> NDArray[np.int64]:
        return np.diff(self.good)

    def ratios(self) -> NDArray[np.float64]:
        """g_m/j_m for consecutive good indices."""
        if self.count < 2:
            return np.zeros(0)
        return self.gaps() / self.good[:-1].astype(np.float64)

    def count_upto(self, n: int) -> int:
        return int(np.searchsorted(self.good, n, side="right"))


@dataclass
class GoodIndexScan:
    n_max: int
    positive: SideScan
    negative: SideScan

    @property
    def insufficient(self) -> bool:
        return self.positive.insufficient or self.negative.insufficient

    @property
    def max_ratio_tail(self) -> float:
        return max(tail_max(self.positive.ratios()), tail_max(self.negative.ratios()))

    @property
    def ratios_decreasing(self) -> bool:
        return is_tail_decreasing(self.positive.ratios()) and is_tail_decreasing(self.negative.ratios())

    def subsequence(self) -> SparseSubsequence:
        sites = np.concatenate((-self.negative.good[::-1], [0], self.positive.good))
        return SparseSubsequence.explicit(sites.tolist())


def extract_good_subsequence(coins: CoinSequence, n_max: int) -> GoodIndexScan:
    """Collects k ≤ n_max with |a(k)| ≤ 1/k, separately for a(k) and a(−k)."""
    if n_max < 1:
        raise InvalidParameterError(f"n_max must be ≥ 1, got {n_max}")
    k = np.arange(1, n_max + 1, dtype=np.int64)
    threshold = 1.0 / k
    positive = k[coins.transmission_moduli(k) <= threshold]
    negative = k[coins.transmission_moduli(-k) <= threshold]
    scan = GoodIndexScan(n_max=n_max, positive=SideScan(positive), negative=SideScan(negative))
    if scan.insufficient:
        logger.warning(
            f"Only {scan.positive.count}/{scan.negative.count} good indices up to {n_max}"
        )
    return scan


def block_length(n: int, alpha: float) -> int:
    """h(n) = ⌈n^α (ln n)²⌉."""
    return math.ceil(n**alpha * math.log(n) ** 2)


@dataclass
class SideBlockDiagnostics:
    occurrences: List[int]
    checked: int
    by_scale: Dict[int, int]
    envelope_violations: List[int]


@dataclass
class BlockGapReport:
    alpha: float
    positive: SideBlockDiagnostics
    negative: SideBlockDiagnostics


def _side_block_diagnostics(side: SideScan, n_max: int, alpha: float) -> SideBlockDiagnostics:
    good = side.good
    occurrences: List[int] = []
    checked = 0
    for pos, n in enumerate(good.tolist()):
        h = block_length(n, alpha)
        if n + h > n_max:
            break
        checked += 1
        nxt = good[pos + 1] if pos + 1 < len(good) else None
        if nxt is None or nxt > n + h:
            occurrences.append(n)
    by_scale: Dict[int, int] = {}
    for n in occurrences:
        scale = int(math.log2(n))
        by_scale[scale] = by_scale.get(scale, 0) + 1

    violations: List[int] = []
    if len(good) >= 2:
        j = good[:-1].astype(np.float64)
        ratio = np.diff(good) / j
        envelope = j ** (alpha - 1.0) * np.log(j) ** 2 + 1.0 / j
        violations = good[:-1][ratio > envelope].tolist()
    return SideBlockDiagnostics(occurrences, checked, by_scale, violations)


def block_gap_diagnostics(scan: GoodIndexScan, alpha: float) -> BlockGapReport:
    """
    Blocks B_n: a good index n with no further good index in (n, n + h(n)].
    Only n with n + h(n) ≤ n_max are decidable. The envelope check compares
    g_m/j_m with j_m^{α−1}(ln j_m)² + 1/j_m for all but the last good index.
    """
    return BlockGapReport(
        alpha=alpha,
        positive=_side_block_diagnostics(scan.positive, scan.n_max, alpha),
        negative=_side_block_diagnostics(scan.negative, scan.n_max, alpha),
    )


def dyadic_empty_blocks(side: SideScan, scales: Sequence[int]) -> Dict[int, bool]:
    """For each n, whether [2ⁿ, 2ⁿ⁺¹) contains no good index."""
    out = {}
    for n in scales:
        lo, hi = 2**n, 2 ** (n + 1)
        out[n] = side.count_upto(hi - 1) - side.count_upto(lo - 1) == 0
    return out


def dyadic_empty_probability(n: int) -> float:
    """ℙ(no good index in [2ⁿ, 2ⁿ⁺¹)) for |a| uniform: (2ⁿ − 1)/(2ⁿ⁺¹ − 1)."""
    return (2**n - 1) / (2 ** (n + 1) - 1)


def good_count_profile(scans: Sequence[GoodIndexScan], checkpoints: Sequence[int]) -> Dict[int, float]:
    """Median over scans of the number of positive good indices in [1, n]."""
    return {n: float(statistics.median(scan.positive.count_upto(n) for scan in scans)) for n in checkpoints}


@dataclass
class ScanDiagnostics:
    distribution: str
    n_max: int
    ecdf: List[EcdfCheck]
    good_count_medians: Dict[int, float]
    envelope_pass_fraction: float
    dyadic_empty_fraction: Optional[float]
    dyadic_expected: Dict[int, float]

    def summary(self) -> dict:
        return {
            "distribution": self.distribution,
            "n_max": self.n_max,
            "ecdf": [{"x": c.x, "ecdf": c.ecdf, "bound": c.bound, "ok": c.ok} for c in self.ecdf],
            "good_count_medians": self.good_count_medians,
            "envelope_pass_fraction": self.envelope_pass_fraction,
            "dyadic_empty_fraction": self.dyadic_empty_fraction,
            "dyadic_expected": self.dyadic_expected,
        }


def scan_diagnostics(
    dist: TailDistribution,
    seeds: Sequence[int],
    n_max: int,
    stream: int = COIN_STREAMS["c2"],
    max_violations: int = 3,
    dyadic_scales: Sequence[int] = (),
) -> ScanDiagnostics:
    """
    Pooled statistics of the good-index scans of one coin stream over many
    seeds: the lower-tail ECDF on ±[1, n_max], median good counts at powers of
    ten, the share of (seed, side) pairs with at most `max_violations`
    envelope violations, and the share of empty dyadic blocks on the positive side.
    """
    if not seeds:
        raise InvalidParameterError("At least one seed is required.")
    k = np.arange(1, n_max + 1, dtype=np.int64)
    pooled: List[NDArray[np.float64]] = []
    scans: List[GoodIndexScan] = []
    for seed in seeds:
        coins = sample_coins(dist, seed, stream)
        pooled.extend((coins.transmission_moduli(k), coins.transmission_moduli(-k)))
        scans.append(extract_good_subsequence(coins, n_max))

    pairs_ok = []
    for scan in scans:
        report = block_gap_diagnostics(scan, dist.alpha)
        pairs_ok.extend(len(side.envelope_violations) <= max_violations for side in (report.positive, report.negative))

    scales = [n for n in dyadic_scales if 2 ** (n + 1) - 1 <= n_max]
    empties = [empty for scan in scans for empty in dyadic_empty_blocks(scan.positive, scales).values()]
    checkpoints = [10**p for p in range(3, 10) if 10**p <= n_max]
    return ScanDiagnostics(
        distribution=dist.label,
        n_max=n_max,
        ecdf=ecdf_domination(np.concatenate(pooled), dist),
        good_count_medians=good_count_profile(scans, checkpoints),
        envelope_pass_fraction=sum(pairs_ok) / len(pairs_ok),
        dyadic_empty_fraction=sum(empties) / len(empties) if empties else None,
        dyadic_expected={n: dyadic_empty_probability(n) for n in scales},
    )


@dataclass
class RandomSeedRow:
    seed: int
    n_max: int
    good_count_pos: int
    good_count_neg: int
    max_ratio_tail: float
    bound_estimate: Optional[float]
    vhat_tmax: float
    ratios_decreasing: bool
    no_conclusion: bool
    k: Optional[int] = None

    def row(self) -> dict:
        return {
            "seed": self.seed,
            "n_max": self.n_max,
            "good_count_pos": self.good_count_pos,
            "good_count_neg": self.good_count_neg,
            "max_ratio_tail": repr(self.max_ratio_tail),
            "bound_estimate": "" if self.bound_estimate is None else repr(self.bound_estimate),
            "vhat_tmax": repr(self.vhat_tmax),
            "ratios_decreasing": self.ratios_decreasing,
        }


@dataclass
class RandomExperimentReport:
    distribution: str
    t_max: int
    n_max: int
    rows: List[RandomSeedRow]
    generator: str = GENERATOR_ID
    aggregate: Dict[str, object] = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "distribution": self.distribution,
            "generator": self.generator,
            "seeds": [r.seed for r in self.rows],
            "t_max": self.t_max,
            "n_max": self.n_max,
            **self.aggregate,
        }


def _seed_pipeline(
    dist: TailDistribution,
    seed: int,
    t_max: int,
    n_max: int,
    family: Sequence[FamilyMember],
    n_range: Sequence[int],
) -> RandomSeedRow:
    c1 = sample_coins(dist, seed, stream=COIN_STREAMS["c1"])
    c2 = sample_coins(dist, seed, stream=COIN_STREAMS["c2"])
    coins = {1: c1, 2: c2}
    scans = {k: extract_good_subsequence(coin, n_max) for k, coin in coins.items()}

    bound: Optional[float] = None
    best_k: Optional[int] = None
    candidates = {k: [scan.subsequence()] for k, scan in scans.items() if not scan.insufficient}
    if candidates:
        try:
            report = general_velocity_bound(candidates, coins, n_range)
            if report.best_entry is not None:
                bound, best_k = report.best, report.best_entry.k
        except (NotInJError, InsufficientDataError) as e:
            logger.warning(f"seed {seed}: {e}")
    scan = scans[best_k] if best_k is not None else scans[2]

    estimate = velocity_proxy(SplitStepWalk(c1, c2), family, [t_max])
    ratios_decreasing = scan.ratios_decreasing
    no_conclusion = scan.insufficient or scan.max_ratio_tail >= RATIO_TAIL_NO_CONCLUSION or not ratios_decreasing
    logger.debug(f"seed {seed}: bound={bound}, vhat={estimate.proxy:.4g}, no_conclusion={no_conclusion}")
    return RandomSeedRow(
        seed=seed,
        n_max=n_max,
        good_count_pos=scan.positive.count,
        good_count_neg=scan.negative.count,
        max_ratio_tail=scan.max_ratio_tail,
        bound_estimate=bound,
        vhat_tmax=estimate.proxy,
        ratios_decreasing=ratios_decreasing,
        no_conclusion=no_conclusion,
        k=best_k,
    )


def random_zero_velocity_experiment(
    dist: TailDistribution,
    seeds: Sequence[int],
    t_max: int,
    n_max: int = 10**5,
    threads: int = 1,
    family: Optional[Sequence[FamilyMember]] = None,
    n_range: Sequence[int] = DEFAULT_N_RANGE,
) -> RandomExperimentReport:
    """
    Per seed: sample both coin sequences, extract good subsequences, evaluate
    the general bound, and evolve to t_max. Seeds run in parallel; rows are
    returned in seed order.
    """
    if t_max < 1:
        raise InvalidParameterError(f"t_max must be ≥ 1, got {t_max}")
    family = list(family) if family is not None else delta_family()
    rows: List[RandomSeedRow] = []
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        futures = {
            executor.submit(_seed_pipeline, dist, seed, t_max, n_max, family, n_range): seed
            for seed in seeds
        }
        for future in as_completed(futures):
            rows.append(future.result())
    rows.sort(key=lambda r: r.seed)

    bounds = [r.bound_estimate for r in rows if r.bound_estimate is not None]
    aggregate: Dict[str, object] = {
        "median_vhat_tmax": statistics.median(r.vhat_tmax for r in rows) if rows else None,
        "median_bound": statistics.median(bounds) if bounds else None,
        "no_conclusion_count": sum(r.no_conclusion for r in rows),
        "ratios_decreasing_count": sum(r.ratios_decreasing for r in rows),
        "seed_count": len(rows),
    }
    if aggregate["no_conclusion_count"]:
        logger.warning(f"{aggregate['no_conclusion_count']} of {len(rows)} seeds reached no conclusion")
    return RandomExperimentReport(dist.label, t_max, n_max, rows, aggregate=aggregate)
