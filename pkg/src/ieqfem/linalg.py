"""Sparse matrix composition and linear solvers.

Matrices are ``scipy.sparse.csr_matrix`` instances with sorted, duplicate-free
column indices. Every solver re-checks its answer with an independent
mat-vec before returning.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import LinearSolverError, StructuralError

log = logging.getLogger(__name__)


@dataclass
class SolveInfo:
    method: str
    iterations: int
    residual: float
    wall_ms: float = 0.0


def relative_residual(A, x, b):
    """||A x - b|| / ||b|| (absolute when b = 0)."""
    r = A @ x - b
    nb = np.linalg.norm(b)
    nr = np.linalg.norm(r)
    return nr / nb if nb > 0 else nr


def compose_blocks(blocks):
    """Assemble a block grid into one CSR matrix.

    ``blocks`` is a list of rows; each entry is None, a sparse matrix, or a
    ``(matrix, scalar)`` pair meaning ``scalar * matrix``.
    """
    nbr = len(blocks)
    if nbr == 0 or any(len(row) != len(blocks[0]) for row in blocks):
        raise StructuralError("block grid must be rectangular and non-empty")
    nbc = len(blocks[0])
    grid = [[None] * nbc for _ in range(nbr)]
    row_dims = [None] * nbr
    col_dims = [None] * nbc
    for i, row in enumerate(blocks):
        for j, entry in enumerate(row):
            if entry is None:
                continue
            if isinstance(entry, tuple):
                mat, scale = entry
                mat = sp.csr_matrix(mat) * float(scale)
            else:
                mat = sp.csr_matrix(entry)
            r, c = mat.shape
            if row_dims[i] is None:
                row_dims[i] = r
            elif row_dims[i] != r:
                raise StructuralError(f"block ({i},{j}) has {r} rows, expected {row_dims[i]}")
            if col_dims[j] is None:
                col_dims[j] = c
            elif col_dims[j] != c:
                raise StructuralError(f"block ({i},{j}) has {c} columns, expected {col_dims[j]}")
            grid[i][j] = mat
    if None in row_dims or None in col_dims:
        raise StructuralError("every block row and column needs at least one non-empty block")
    out = sp.bmat(grid, format="csr")
    out.sum_duplicates()
    out.sort_indices()
    return out


def solve_direct(A, b, tol=1e-12, max_refine=3):
    """Sparse LU solve with iterative refinement.

    Raises :class:`LinearSolverError` if the factorization is singular or the
    relative residual stays above ``tol`` after refinement.
    """
    A = sp.csc_matrix(A)
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise StructuralError(f"matrix must be square, got {A.shape}")
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        pivot = _empty_row(A)
        raise LinearSolverError(f"singular factorization ({exc}); pivot row {pivot}", pivot_row=pivot) from exc
    return solve_direct_with(lu, A, b, tol, max_refine)


def _empty_row(A):
    A = sp.csr_matrix(A)
    nnz = np.diff(A.indptr)
    rows = np.flatnonzero(nnz == 0)
    if len(rows):
        return int(rows[0])
    diag = A.diagonal()
    zero = np.flatnonzero(diag == 0)
    return int(zero[0]) if len(zero) else None


def solve_cg(A, b, tol=1e-12, max_iter=None, x0=None):
    """Jacobi-preconditioned conjugate gradients for SPD ``A``.

    Returns ``(x, iterations)``. The stopping test uses the true residual
    ``b - A x`` recomputed every iteration.
    """
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    n = len(b)
    if max_iter is None:
        max_iter = max(10 * n, 100)
    nb = np.linalg.norm(b)
    if nb == 0:
        return np.zeros(n), 0
    d = A.diagonal()
    if np.any(d <= 0):
        raise LinearSolverError("CG needs a positive diagonal (matrix not SPD)")
    inv_d = 1.0 / d
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    if np.linalg.norm(r) <= tol * nb:
        return x, 0
    z = inv_d * r
    p = z.copy()
    rz = r @ z
    for k in range(1, max_iter + 1):
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            raise LinearSolverError("CG breakdown: non-positive curvature", residual=np.linalg.norm(r) / nb, iterations=k)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= tol * nb:
            # guard against recurrence drift with a fresh residual
            r = b - A @ x
            if np.linalg.norm(r) <= tol * nb:
                return x, k
        z = inv_d * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    res = np.linalg.norm(b - A @ x) / nb
    raise LinearSolverError(f"CG did not converge in {max_iter} iterations (residual {res:.3e})", residual=res, iterations=max_iter)


def solve_krylov(A, b, tol=1e-12, restart=80, max_iter=4000):
    """Restarted GMRES with diagonal scaling, for large indefinite systems."""
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    if np.linalg.norm(b) == 0:
        return np.zeros(len(b)), SolveInfo("gmres", 0, 0.0)
    d = np.abs(A.diagonal())
    d[d == 0] = 1.0
    M = sp.diags(1.0 / d)
    count = [0]

    def cb(_):
        count[0] += 1

    x, flag = spla.gmres(A, b, rtol=tol, restart=restart, maxiter=max_iter, M=M, callback=cb, callback_type="pr_norm")
    res = relative_residual(A, x, b)
    if flag != 0 or res > 10 * tol:
        raise LinearSolverError(f"GMRES stopped with flag {flag}, residual {res:.3e}", residual=res, iterations=count[0])
    return x, SolveInfo("gmres", count[0], res)


def solve(A, b, method="direct", tol=1e-12, x0=None):
    """Dispatch to a solver; returns ``(x, SolveInfo)``.

    ``x0`` is an initial guess, used by CG only.
    """
    if method == "direct":
        return solve_direct(A, b, tol=tol)
    if method == "cg":
        x, it = solve_cg(A, b, tol=tol, x0=x0)
        return x, SolveInfo("cg", it, relative_residual(A, x, b))
    if method == "krylov":
        return solve_krylov(A, b, tol=tol)
    raise ValueError(f"unknown solver {method!r}")


class MassSolver:
    """Cached factorization of a fixed SPD mass matrix.

    Used for the L2 projection, which runs every step with the same matrix.
    """

    def __init__(self, G, method="direct", tol=1e-12):
        self.G = sp.csr_matrix(G)
        self.method = method
        self.tol = tol
        self._lu = spla.splu(sp.csc_matrix(G)) if method == "direct" else None
        self.last_iterations = 0

    def __call__(self, b):
        if self._lu is not None:
            x = self._lu.solve(b)
            x = x + self._lu.solve(b - self.G @ x)
            self.last_iterations = 1
            return x
        x, it = solve_cg(self.G, b, tol=self.tol)
        self.last_iterations = it
        return x


class RecycledLU:
    """GMRES preconditioned by the LU factors of an earlier, nearby matrix.

    Step matrices change slowly from one time step to the next, so the
    factorization of a previous step is an excellent preconditioner. The
    factors are refreshed whenever GMRES needs more than ``max_iter``
    iterations or fails.
    """

    def __init__(self, tol=1e-12, max_iter=12):
        self.tol = tol
        self.max_iter = max_iter
        self._lu = None
        self.refactorizations = 0

    def _factor(self, A):
        self._lu = spla.splu(sp.csc_matrix(A))
        self.refactorizations += 1

    def __call__(self, A, b):
        A = sp.csr_matrix(A)
        b = np.asarray(b, dtype=float)
        if self._lu is None or self._lu.shape != A.shape:
            self._factor(A)
            x, info = solve_direct_with(self._lu, A, b, self.tol)
            return x, info
        lu = self._lu
        M = spla.LinearOperator(A.shape, matvec=lu.solve, dtype=float)
        count = [0]

        def cb(_):
            count[0] += 1

        x, flag = spla.gmres(A, b, x0=lu.solve(b), rtol=self.tol, restart=self.max_iter,
                             maxiter=1, M=M, callback=cb, callback_type="pr_norm")
        res = relative_residual(A, x, b)
        if flag == 0 and res <= self.tol:
            return x, SolveInfo("recycled-lu", count[0], res)
        self._factor(A)
        return solve_direct_with(self._lu, A, b, self.tol)


def solve_direct_with(lu, A, b, tol=1e-12, max_refine=3):
    """Solve with given LU factors of ``A`` plus refinement against ``A``."""
    x = lu.solve(b)
    res = relative_residual(A, x, b)
    it = 0
    while res > tol and it < max_refine:
        x = x + lu.solve(b - A @ x)
        res = relative_residual(A, x, b)
        it += 1
    if not np.all(np.isfinite(x)):
        raise LinearSolverError("direct solve produced non-finite values", residual=res)
    if res > tol:
        raise LinearSolverError(f"direct solve residual {res:.3e} above {tol:.1e}", residual=res, iterations=it)
    return x, SolveInfo("direct", it, res)
