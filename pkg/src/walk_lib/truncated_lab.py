"""
Dense finite-window oracle for the CMV factors, position operators and
their commutators.

A window is given in CMV indices [n_lo, n_hi] and must cover whole sites,
i.e. n_lo odd and n_hi even; it then corresponds to the sites
[(n_lo+1)/2, n_hi/2]. M blocks tile such a window exactly. The two L blocks
cut by the window edge are completed according to `BoundaryCompletion`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from loguru import logger
from numpy.typing import NDArray

from walk_lib.bounds import ModifiedPosition, effective_q, relative_bound_from_q
from walk_lib.constants import (
    POWER_ITERATION_MAX_STEPS,
    POWER_ITERATION_TOL,
    Q_BOUND_EPSILON,
    SVD_MAX_DIM,
    VELOCITY_SYMMETRY_TOL,
)
from walk_lib.enums import BoundaryCompletion, ModifiedPositionKind
from walk_lib.errors import AlignmentError, InvalidArgumentError
from walk_lib.helpers import ceil_half, tail_quartile
from walk_lib.lattice_state import CmvVector, WalkState, from_cmv, to_cmv
from walk_lib.subsequence import SparseSubsequence
from walk_lib.walk_engine import CmvFactors

MATRIX_COLUMNS = ["row", "col", "re", "im"]


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    n_lo: int
    n_hi: int
    matrix: NDArray[np.complex128]
    boundary: BoundaryCompletion
    label: str = ""

    @property
    def dim(self) -> int:
        return self.n_hi - self.n_lo + 1

    @property
    def site_window(self) -> Tuple[int, int]:
        return (self.n_lo + 1) // 2, self.n_hi // 2

    def unitarity_defect(self) -> float:
        eye = np.eye(self.dim)
        return float(np.abs(self.matrix @ self.matrix.conj().T - eye).max())


@dataclass(frozen=True, eq=False)
class TruncatedFactors:
    L: TruncatedOperator
    M: TruncatedOperator
    W: TruncatedOperator


def cmv_window(site_lo: int, site_hi: int) -> Tuple[int, int]:
    """CMV window covering the sites [site_lo, site_hi]."""
    if site_hi < site_lo:
        raise AlignmentError(f"Empty site window [{site_lo}, {site_hi}]")
    return 2 * site_lo - 1, 2 * site_hi


def _check_window(window: Tuple[int, int]) -> Tuple[int, int]:
    n_lo, n_hi = window
    if n_lo % 2 == 0 or n_hi % 2 != 0 or n_hi <= n_lo:
        raise AlignmentError(
            f"Window [{n_lo}, {n_hi}] must start at an odd and end at an even CMV index"
        )
    return n_lo, n_hi


def _place_blocks(matrix: NDArray[np.complex128], first: NDArray[np.int64], blocks: NDArray[np.complex128]) -> None:
    matrix[first, first] = blocks[:, 0, 0]
    matrix[first, first + 1] = blocks[:, 0, 1]
    matrix[first + 1, first] = blocks[:, 1, 0]
    matrix[first + 1, first + 1] = blocks[:, 1, 1]


def build_truncated(
    factors: CmvFactors,
    window: Tuple[int, int],
    boundary: BoundaryCompletion = BoundaryCompletion.IDENTITY,
) -> TruncatedFactors:
    n_lo, n_hi = _check_window(window)
    s_lo, s_hi = (n_lo + 1) // 2, n_hi // 2
    dim = n_hi - n_lo + 1

    m_mat = np.zeros((dim, dim), dtype=np.complex128)
    m_sites = np.arange(s_lo, s_hi + 1, dtype=np.int64)
    _place_blocks(m_mat, 2 * m_sites - 1 - n_lo, factors.m_blocks(m_sites))

    l_mat = np.zeros((dim, dim), dtype=np.complex128)
    l_sites = np.arange(s_lo, s_hi, dtype=np.int64)
    if len(l_sites):
        _place_blocks(l_mat, 2 * l_sites - n_lo, factors.l_blocks(l_sites))
    if boundary == BoundaryCompletion.IDENTITY:
        l_mat[0, 0] = 1.0
        l_mat[dim - 1, dim - 1] = 1.0
    else:
        theta = factors.l_blocks(np.array([s_hi], dtype=np.int64))[0]
        last, first = dim - 1, 0
        l_mat[last, last] = theta[0, 0]
        l_mat[last, first] = theta[0, 1]
        l_mat[first, last] = theta[1, 0]
        l_mat[first, first] = theta[1, 1]

    L = TruncatedOperator(n_lo, n_hi, l_mat, boundary, "L")
    M = TruncatedOperator(n_lo, n_hi, m_mat, boundary, "M")
    W = TruncatedOperator(n_lo, n_hi, l_mat @ m_mat, boundary, "W")
    logger.debug(f"Built truncated factors on [{n_lo}, {n_hi}] ({boundary} completion)")
    return TruncatedFactors(L=L, M=M, W=W)


def position_diagonal(window: Tuple[int, int]) -> NDArray[np.float64]:
    n_lo, n_hi = _check_window(window)
    return ceil_half(np.arange(n_lo, n_hi + 1, dtype=np.int64)).astype(np.float64)


def modified_position_matrix(op: ModifiedPosition, window: Tuple[int, int]) -> NDArray[np.complex128]:
    n_lo, n_hi = _check_window(window)
    return np.diag(op.cmv_diagonal(n_lo, n_hi)).astype(np.complex128)


def dense_commutator(a: NDArray, b: NDArray) -> NDArray[np.complex128]:
    if a.shape != b.shape:
        raise InvalidArgumentError(f"Shape mismatch {a.shape} vs {b.shape}")
    return a @ b - b @ a


def _power_iteration_norm(matrix: NDArray[np.complex128], seed: int) -> float:
    """sqrt of the top eigenvalue of A^H A by power iteration."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(matrix.shape[1]) + 1j * rng.standard_normal(matrix.shape[1])
    x /= np.linalg.norm(x)
    estimate = 0.0
    for it in range(POWER_ITERATION_MAX_STEPS):
        y = matrix.conj().T @ (matrix @ x)
        y_norm = float(np.linalg.norm(y))
        if y_norm == 0.0:
            return 0.0
        x = y / y_norm
        if abs(y_norm - estimate) <= POWER_ITERATION_TOL * max(y_norm, 1.0):
            logger.trace(f"Power iteration converged after {it + 1} steps")
            return math.sqrt(y_norm)
        estimate = y_norm
    logger.warning("Power iteration did not reach the requested tolerance")
    return math.sqrt(estimate)


def operator_norm(matrix: NDArray, seed: int = 0) -> float:
    """Largest singular value; power iteration above SVD_MAX_DIM."""
    if matrix.size == 0:
        return 0.0
    if max(matrix.shape) <= SVD_MAX_DIM:
        return float(scipy.linalg.svdvals(matrix)[0])
    return _power_iteration_norm(np.asarray(matrix, dtype=np.complex128), seed)


def off_diagonal_max(matrix: NDArray) -> float:
    off = matrix - np.diag(np.diag(matrix))
    return float(np.abs(off).max()) if off.size else 0.0


def embed_state(state: WalkState, window: Tuple[int, int]) -> NDArray[np.complex128]:
    n_lo, n_hi = _check_window(window)
    seq = to_cmv(state)
    if seq.start < n_lo or seq.stop > n_hi:
        raise InvalidArgumentError(f"State on [{seq.start}, {seq.stop}] does not fit window [{n_lo}, {n_hi}]")
    vec = np.zeros(n_hi - n_lo + 1, dtype=np.complex128)
    vec[seq.start - n_lo: seq.stop - n_lo + 1] = seq.values
    return vec


def extract_state(vec: NDArray[np.complex128], window: Tuple[int, int]) -> WalkState:
    n_lo, _ = _check_window(window)
    return from_cmv(CmvVector(start=n_lo, values=np.asarray(vec, dtype=np.complex128)))


def _dense_velocity(
    unitary: NDArray[np.complex128],
    q_diag: NDArray[np.float64],
    family: Sequence[NDArray[np.complex128]],
    t_grid: Sequence[int],
) -> float:
    grid = sorted(set(int(t) for t in t_grid))
    tail = set(int(t) for t in tail_quartile(np.array(grid)))
    best = 0.0
    for phi in family:
        x = np.array(phi, dtype=np.complex128)
        t = 0
        for target in grid:
            while t < target:
                x = unitary @ x
                t += 1
            if t in tail:
                best = max(best, float(np.linalg.norm(q_diag * x)) / t)
    return best


@dataclass
class SymmetryReport:
    proxies: Dict[str, float]
    max_discrepancy: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_discrepancy <= self.tolerance


def velocity_symmetry_check(
    u1: NDArray[np.complex128],
    u2: NDArray[np.complex128],
    t_grid: Sequence[int],
    family: Sequence[NDArray[np.complex128]],
    window: Tuple[int, int],
    tolerance: float = VELOCITY_SYMMETRY_TOL,
) -> SymmetryReport:
    """Finite-time velocity proxies of U₁U₂ and U₂U₁ on the same window."""
    if u1.shape != u2.shape:
        raise InvalidArgumentError(f"Shape mismatch {u1.shape} vs {u2.shape}")
    q_diag = position_diagonal(window)
    proxies = {
        "U1U2": _dense_velocity(u1 @ u2, q_diag, family, t_grid),
        "U2U1": _dense_velocity(u2 @ u1, q_diag, family, t_grid),
    }
    return SymmetryReport(proxies, abs(proxies["U1U2"] - proxies["U2U1"]), tolerance)


def cyclic_shift(dim: int) -> NDArray[np.complex128]:
    """T with T e_k = e_{k+1} (indices mod dim)."""
    return np.roll(np.eye(dim, dtype=np.complex128), 1, axis=0)


def cmv_ordering_check(
    factors: TruncatedFactors,
    t_grid: Sequence[int],
    family: Sequence[NDArray[np.complex128]],
    tolerance: float = VELOCITY_SYMMETRY_TOL,
) -> SymmetryReport:
    """Compares the proxies of LM, ML and T⁻¹MLT."""
    window = (factors.L.n_lo, factors.L.n_hi)
    q_diag = position_diagonal(window)
    L, M = factors.L.matrix, factors.M.matrix
    T = cyclic_shift(factors.L.dim)
    proxies = {
        "LM": _dense_velocity(L @ M, q_diag, family, t_grid),
        "ML": _dense_velocity(M @ L, q_diag, family, t_grid),
        "TinvMLT": _dense_velocity(T.conj().T @ M @ L @ T, q_diag, family, t_grid),
    }
    values = list(proxies.values())
    return SymmetryReport(proxies, max(values) - min(values), tolerance)


@dataclass
class QBoundWitness:
    """
    Constants in ‖(Q − Q̃_N)ϕ‖ ≤ M·‖ϕ‖ + (c_N + ε)·‖Qϕ‖ on a window, with the
    worst observed slack over random ϕ. M and the good/bad split come from the
    block endpoints j_m, j_{m+1} of the subsequence, not from the dense operators.
    """
    N: int
    c_N: float
    epsilon: float
    m_const: float
    max_violation: float
    samples: int
    good_blocks: int
    bad_blocks: int

    @property
    def holds(self) -> bool:
        return self.max_violation <= 1e-12


def block_deviation_bounds(
    op: ModifiedPosition,
    blocks: Sequence[int],
    slope: float,
) -> Tuple[float, int, int]:
    """
    On ℋ_m the sites run from j_m to j_{m+1} on one side of the origin, so
    |x − D_m| − slope·|x| peaks at an endpoint. A block is good when both
    endpoints satisfy |x − D_m| ≤ slope·|x|; M is the largest endpoint
    deviation over the bad blocks.
    """
    seq = op.seq
    m = np.asarray(blocks, dtype=np.int64)
    values = op.block_values(m)
    if np.any(np.isnan(values)):
        raise InvalidArgumentError("The subsequence does not cover the blocks of the window")
    ends = np.stack([seq.j(m), seq.j(m + 1)], axis=1).astype(np.float64)
    dev = np.abs(ends - values[:, None])
    good = np.all(dev <= slope * np.abs(ends), axis=1)
    m_const = float(dev[~good].max(initial=0.0))
    return m_const, int(np.count_nonzero(good)), int(np.count_nonzero(~good))


def q_bound_witness(
    seq: SparseSubsequence,
    N: int,
    window: Tuple[int, int],
    rng: np.random.Generator,
    samples: int = 32,
    epsilon: float = Q_BOUND_EPSILON,
    m_const: Optional[float] = None,
) -> QBoundWitness:
    """Checks the inequality on random ϕ; `m_const` replaces the endpoint-derived M."""
    n_lo, n_hi = _check_window(window)
    c_n = relative_bound_from_q(effective_q(seq), N)
    op = ModifiedPosition(ModifiedPositionKind.TILDE, N, seq)
    blocks = np.unique(seq.block_of_cmv(np.arange(n_lo, n_hi + 1, dtype=np.int64)))
    derived, good, bad = block_deviation_bounds(op, blocks.tolist(), c_n + epsilon)
    m_const = derived if m_const is None else m_const

    x = position_diagonal(window)
    deviation = np.abs(x - np.diag(modified_position_matrix(op, window)).real)
    worst = -math.inf
    for _ in range(samples):
        phi = rng.standard_normal(len(x)) + 1j * rng.standard_normal(len(x))
        lhs = float(np.linalg.norm(deviation * phi))
        rhs = m_const * float(np.linalg.norm(phi)) + (c_n + epsilon) * float(np.linalg.norm(x * phi))
        worst = max(worst, (lhs - rhs) / max(rhs, 1.0))
    return QBoundWitness(N, c_n, epsilon, m_const, max(worst, 0.0), samples, good, bad)


def write_matrix_csv(path: Path, op: TruncatedOperator, threshold: float = 0.0) -> int:
    """Writes the entries with modulus above `threshold` as (row, col, re, im) in CMV indices."""
    rows, cols = np.nonzero(np.abs(op.matrix) > threshold)
    with open(path, "w", newline="") as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=MATRIX_COLUMNS)
        writer.writeheader()
        for r, c in zip(rows.tolist(), cols.tolist()):
            value = op.matrix[r, c]
            writer.writerow({"row": r + op.n_lo, "col": c + op.n_lo, "re": repr(value.real), "im": repr(value.imag)})
    return len(rows)


@dataclass
class CommutatorComparison:
    kind: ModifiedPositionKind
    N: int
    formula: float
    dense: float
    off_diagonal: float
    interfaces: int

    @property
    def difference(self) -> float:
        return abs(self.formula - self.dense)


def compare_commutator(
    seq: SparseSubsequence,
    factors: TruncatedFactors,
    kind: ModifiedPositionKind,
    N: int,
    formula: float,
) -> CommutatorComparison:
    """Dense ‖[D, M]‖ and the off-diagonal size of [D, M][D, M]† on the factors' window."""
    window = (factors.M.n_lo, factors.M.n_hi)
    d = modified_position_matrix(ModifiedPosition(kind, N, seq), window)
    comm = dense_commutator(d, factors.M.matrix)
    s_lo, s_hi = factors.M.site_window
    interfaces = int(np.count_nonzero((seq.sites >= s_lo) & (seq.sites <= s_hi)))
    return CommutatorComparison(
        kind=kind,
        N=N,
        formula=formula,
        dense=operator_norm(comm),
        off_diagonal=off_diagonal_max(comm @ comm.conj().T),
        interfaces=interfaces,
    )
