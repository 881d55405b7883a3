from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from walk_lib.enums import SubsequenceKind
from walk_lib.errors import InvalidArgumentError, InvalidParameterError

_MAX_SITE = 2**62


class SparseSubsequence:
    """
    A strictly increasing family (j_m) with j_0 = 0, materialized for
    m_min ≤ m ≤ m_max. Generator-backed families can be re-materialized at a
    larger horizon; explicit families are what they are.

    Gap convention: g_m = j_{m+1} − j_m for m ≥ 0 and g_m = j_m − j_{m−1} for m < 0.
    """

    def __init__(
        self,
        sites: NDArray[np.int64],
        zero_index: int,
        kind: SubsequenceKind,
        structural_q: Optional[float] = None,
        generator: Optional[Callable[[int], NDArray[np.int64]]] = None,
    ) -> None:
        sites = np.asarray(sites, dtype=np.int64)
        if sites.ndim != 1 or len(sites) == 0:
            raise InvalidArgumentError("A subsequence needs at least one site.")
        if not 0 <= zero_index < len(sites) or sites[zero_index] != 0:
            raise InvalidArgumentError("Subsequences are normalized so that j_0 = 0.")
        if len(sites) > 1 and np.any(np.diff(sites) <= 0):
            raise InvalidArgumentError("Subsequence sites must be strictly increasing.")
        self._sites = sites
        self._zero = zero_index
        self.kind = kind
        self.structural_q = structural_q
        self._generator = generator

    # --- construction ---
    @classmethod
    def arithmetic(cls, step: int, horizon: int) -> SparseSubsequence:
        if step < 1:
            raise InvalidParameterError(f"Arithmetic step must be ≥ 1, got {step}")
        _require_horizon(horizon)

        def generate(h: int) -> NDArray[np.int64]:
            m = np.arange(-h, h + 1, dtype=np.int64)
            return step * m

        return cls(generate(horizon), horizon, SubsequenceKind.ARITHMETIC, 0.0, generate)

    @classmethod
    def trivial(cls, horizon: int) -> SparseSubsequence:
        """j_m = m."""
        return cls.arithmetic(1, horizon)

    @classmethod
    def power(cls, exponent: float, horizon: int) -> SparseSubsequence:
        """j_m = sign(m)·round(|m|^p) for p ≥ 1."""
        if exponent < 1.0:
            raise InvalidParameterError(f"Power exponent must be ≥ 1, got {exponent}")
        _require_horizon(horizon)

        def generate(h: int) -> NDArray[np.int64]:
            m = np.arange(-h, h + 1, dtype=np.int64)
            magnitude = np.rint(np.abs(m).astype(np.float64) ** exponent)
            if magnitude[-1] >= _MAX_SITE:
                raise InvalidParameterError(f"Power subsequence overflows at horizon {h}")
            return np.sign(m) * magnitude.astype(np.int64)

        return cls(generate(horizon), horizon, SubsequenceKind.POWER, 0.0, generate)

    @classmethod
    def geometric(cls, base: int, horizon: int) -> SparseSubsequence:
        """j_m = sign(m)·base^|m|; the relative gaps equal base − 1 exactly."""
        if base < 2:
            raise InvalidParameterError(f"Geometric base must be ≥ 2, got {base}")
        _require_horizon(horizon)

        def generate(h: int) -> NDArray[np.int64]:
            if base**h >= _MAX_SITE:
                raise InvalidParameterError(f"Geometric subsequence with base {base} overflows at horizon {h}")
            m = np.arange(-h, h + 1, dtype=np.int64)
            magnitude = np.array([0 if k == 0 else base ** abs(int(k)) for k in m], dtype=np.int64)
            return np.sign(m) * magnitude

        return cls(generate(horizon), horizon, SubsequenceKind.GEOMETRIC, float(base - 1), generate)

    @classmethod
    def explicit(cls, sites: Sequence[int]) -> SparseSubsequence:
        arr = np.asarray(sorted(sites), dtype=np.int64)
        hits = np.flatnonzero(arr == 0)
        if len(hits) != 1:
            raise InvalidArgumentError("Explicit subsequences must contain the site 0 exactly once.")
        return cls(arr, int(hits[0]), SubsequenceKind.EXPLICIT)

    # --- materialized range ---
    @property
    def m_min(self) -> int:
        return -self._zero

    @property
    def m_max(self) -> int:
        return len(self._sites) - 1 - self._zero

    @property
    def horizon_plus(self) -> int:
        return self.m_max

    @property
    def horizon_minus(self) -> int:
        return -self.m_min

    @property
    def horizon(self) -> int:
        return max(self.horizon_plus, self.horizon_minus)

    @property
    def sites(self) -> NDArray[np.int64]:
        return self._sites

    @property
    def indices(self) -> NDArray[np.int64]:
        return np.arange(self.m_min, self.m_max + 1, dtype=np.int64)

    def j(self, m: int | NDArray[np.int64]) -> int | NDArray[np.int64]:
        idx = np.asarray(m) + self._zero
        if np.any(idx < 0) or np.any(idx >= len(self._sites)):
            raise InvalidArgumentError(f"Index outside the materialized range [{self.m_min}, {self.m_max}]")
        out = self._sites[idx]
        return int(out) if np.ndim(out) == 0 else out

    # --- gaps ---
    def gap(self, m: int) -> int:
        if m >= 0:
            return self.j(m + 1) - self.j(m)
        return self.j(m) - self.j(m - 1)

    def left_gap(self, i: int | NDArray[np.int64]) -> int | NDArray[np.int64]:
        """j_i − j_{i−1}; coincides with g_i on the negative side."""
        return self.j(i) - self.j(np.asarray(i) - 1)

    def gaps_plus(self) -> NDArray[np.int64]:
        """g_m for m = 0, ..., m_max − 1."""
        return np.diff(self._sites[self._zero:])

    def gaps_minus(self) -> NDArray[np.int64]:
        """g_m for m = −1, −2, ..., m_min + 1, ordered by |m|."""
        left = self._sites[: self._zero + 1]
        return np.diff(left)[::-1][1:]

    def block_dimension(self, m: int) -> int:
        """d_m = dim ℋ_m = 2(j_{m+1} − j_m)."""
        return 2 * (self.j(m + 1) - self.j(m))

    # --- lookup ---
    def index_of_sites(self, sites: NDArray[np.int64]) -> tuple[NDArray[np.bool_], NDArray[np.int64]]:
        """For each site: whether it is some j_m, and that m (undefined where the mask is False)."""
        sites = np.asarray(sites, dtype=np.int64)
        pos = np.searchsorted(self._sites, sites)
        pos_clipped = np.minimum(pos, len(self._sites) - 1)
        hit = self._sites[pos_clipped] == sites
        return hit, pos_clipped - self._zero

    def block_of_cmv(self, n: NDArray[np.int64]) -> NDArray[np.int64]:
        """Block m with 2j_m ≤ n ≤ 2j_{m+1} − 1."""
        n = np.asarray(n, dtype=np.int64)
        starts = 2 * self._sites
        pos = np.searchsorted(starts, n, side="right") - 1
        if np.any(pos < 0) or np.any(pos >= len(self._sites) - 1):
            raise InvalidArgumentError(
                f"CMV indices [{n.min()}, {n.max()}] are not covered by materialized blocks "
                f"[{starts[0]}, {starts[-1] - 1}]"
            )
        return pos - self._zero

    def covers(self, site_lo: int, site_hi: int) -> bool:
        return bool(self._sites[0] <= site_lo and self._sites[-1] >= site_hi)

    def with_horizon(self, horizon: int) -> SparseSubsequence:
        if self._generator is None:
            return self
        return SparseSubsequence(self._generator(horizon), horizon, self.kind, self.structural_q, self._generator)

    def extended_to_cover(self, site_lo: int, site_hi: int) -> SparseSubsequence:
        """Re-materializes a generator-backed family until it reaches both sites."""
        seq = self
        while not seq.covers(site_lo, site_hi) and seq._generator is not None:
            seq = seq.with_horizon(max(2 * seq.horizon, 1))
            logger.trace(f"Extended {seq.kind} subsequence to horizon {seq.horizon}")
        return seq

    def __repr__(self) -> str:
        return (
            f"SparseSubsequence(kind={self.kind}, m=[{self.m_min}, {self.m_max}], "
            f"sites=[{self._sites[0]}, {self._sites[-1]}])"
        )


def _require_horizon(horizon: int) -> None:
    if horizon < 1:
        raise InvalidParameterError(f"Horizon must be ≥ 1, got {horizon}")
