"""Dense linear algebra for the stage equations.

The implicit stages of one step solve the block system

    (delta_ij I - h a_ij S_j Q) Y_j = y0    (stacked over i)

where the S_j are the skew matrices frozen at the predicted stage states.
Factorisations go through LAPACK (scipy) with an explicit pivot guard so a
step size in the non-contractive regime surfaces as SingularMatrix instead of
garbage.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import SingularMatrix

#: a pivot below this fraction of the matrix norm counts as singular
PIVOT_RTOL = 1e-14


def lu_solve(m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve m x = rhs by LU with partial pivoting.

    Raises SingularMatrix when a pivot falls below PIVOT_RTOL times the
    infinity norm of m.
    """
    m = np.asarray(m, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise SingularMatrix(f"matrix must be square, got shape {m.shape}")
    if rhs.shape[0] != m.shape[0]:
        raise SingularMatrix("right-hand side length does not match the matrix")
    norm = np.max(np.abs(m)) if m.size else 0.0
    lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if norm == 0.0 or pivots.min() < PIVOT_RTOL * norm:
        raise SingularMatrix(
            f"pivot {pivots.min():.3e} below {PIVOT_RTOL:g} * |M| = {PIVOT_RTOL * norm:.3e}; "
            "the step size may be too large"
        )
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def stack_blocks(h: float, a: np.ndarray, sq: np.ndarray) -> np.ndarray:
    """Block matrix with (i, j) block  delta_ij I - h a_ij sq_j."""
    s = a.shape[0]
    d = sq.shape[1]
    t = (h * a)[:, :, None, None] * sq[None, :, :, :]
    return np.eye(s * d) - np.transpose(t, (0, 2, 1, 3)).reshape(s * d, s * d)


def assemble_stage_system(problem, y0, h, a, shats):
    """Assemble the stacked stage system for skew matrices frozen at predictions.

    Returns (matrix, rhs) with rhs the s-fold repetition of y0; the solution
    is the stack of stage vectors.
    """
    shats = np.asarray(shats, dtype=float)
    s = np.asarray(a).shape[0]
    if shats.shape != (s, problem.dim, problem.dim):
        raise SingularMatrix(
            f"expected {s} skew matrices of size {problem.dim}, got shape {shats.shape}"
        )
    sq = shats @ problem.Q
    return stack_blocks(h, np.asarray(a, dtype=float), sq), np.tile(np.asarray(y0, dtype=float), s)


def solve_stages_dirk(problem, y0, h, tableau, shats):
    """Stage solve for lower triangular A: s small solves instead of one big one."""
    a = tableau.A
    if np.triu(a, 1).any():
        raise SingularMatrix("tableau is not lower triangular; use the block path")
    shats = np.asarray(shats, dtype=float)
    sq = shats @ problem.Q
    d = problem.dim
    eye = np.eye(d)
    stages = np.empty((tableau.s, d))
    for i in range(tableau.s):
        rhs = np.asarray(y0, dtype=float) + h * sum(
            a[i, j] * (sq[j] @ stages[j]) for j in range(i)
        )
        stages[i] = lu_solve(eye - h * a[i, i] * sq[i], rhs)
    return stages
