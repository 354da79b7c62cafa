"""Mass, stiffness and load assembly in the shared quadrature inner product."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_threads = 1


def set_threads(n=None):
    """Number of worker threads for element loops; ``None`` reads ``THREADS``.

    Values below 2 keep assembly single-threaded, which is the
    deterministic default.
    """
    global _threads
    if n is None:
        raw = os.environ.get("THREADS", "").strip()
        n = int(raw) if raw else 1
    if int(n) < 1:
        raise ValueError(f"thread count must be at least 1, got {n}")
    _threads = int(n)
    return _threads


def _einsum_elems(expr, *ops, elem_axes):
    """einsum over element-indexed operands, split across threads if enabled."""
    ne = next(o.shape[0] for o, ax in zip(ops, elem_axes) if ax)
    if _threads < 2 or ne < 2 * _threads:
        return np.einsum(expr, *ops, optimize=True)
    bounds = np.linspace(0, ne, _threads + 1).astype(int)

    def work(k):
        lo, hi = bounds[k], bounds[k + 1]
        return np.einsum(expr, *[o[lo:hi] if ax else o for o, ax in zip(ops, elem_axes)], optimize=True)

    with ThreadPoolExecutor(_threads) as pool:
        return np.concatenate(list(pool.map(work, range(_threads))))


def _weight(space, weight):
    if weight is None:
        return space.dx
    w = np.asarray(weight, dtype=float)
    if w.ndim == 0:
        return space.dx * float(w)
    if w.shape != space.qshape:
        raise ValueError(f"weight has shape {w.shape}, expected {space.qshape}")
    return space.dx * w


def assemble_mass(space, weight=None):
    """M_ij = sum_e sum_q w_q det_j weight(e, q) phi_i phi_j.

    ``weight`` is a QuadField, a scalar, or None for the unweighted matrix.
    """
    wq = _weight(space, weight)
    local = _einsum_elems("eq,qi,qj->eij", wq, space.phi, space.phi, elem_axes=(True, False, False))
    return space.csr_from_local(local)


def assemble_stiffness(space, weight=None):
    """S_ij = sum_e sum_q w_q det_j weight(e, q) grad phi_i . grad phi_j."""
    wq = _weight(space, weight)
    g = space.dphi
    local = _einsum_elems("eq,eqid,eqjd->eij", wq, g, g, elem_axes=(True, True, True))
    return space.csr_from_local(local)


def assemble_load(space, qf):
    """b_i = sum_e sum_q w_q det_j qf(e, q) phi_i."""
    qf = np.asarray(qf, dtype=float)
    if qf.shape != space.qshape:
        raise ValueError(f"QuadField has shape {qf.shape}, expected {space.qshape}")
    local = (space.dx * qf) @ space.phi
    return space.vector_from_local(local)


class AssembledOperators:
    """Constant matrices of a run plus the per-step weighted ones.

    ``G`` and ``D`` never change. ``G_H``, ``G_H2`` and ``D_M`` are rebuilt
    by :meth:`reweight` each step from the frozen state; the sparsity pattern
    is shared, so only the data arrays are recomputed.
    """

    def __init__(self, space):
        self.space = space
        self.G = assemble_mass(space)
        self.D = assemble_stiffness(space)
        self.G_H = None
        self.G_H2 = None
        self.D_M = None

    def reweight(self, h_q=None, mobility_q=None, mobility_const=None, need_h=True, need_h2=True):
        if h_q is not None:
            self.G_H = assemble_mass(self.space, h_q) if need_h else None
            self.G_H2 = assemble_mass(self.space, h_q * h_q) if need_h2 else None
        if mobility_q is not None:
            self.D_M = assemble_stiffness(self.space, mobility_q)
        elif mobility_const is not None:
            self.D_M = self.D * float(mobility_const)
        return self
