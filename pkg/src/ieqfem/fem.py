"""Continuous P1/P2 Lagrange spaces on triangle meshes.

Coefficient vectors ("FieldCoeffs") are plain 1-D arrays of length
``space.n_dofs``; fields sampled at quadrature points ("QuadField") are
``(n_elements, n_quad)`` arrays. Every integral in the package is evaluated
with the single rule stored on the space.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .quadrature import QuadRule, quad_rule

# local edge k joins local vertices _P2_EDGES[k]
_P2_EDGES = ((0, 1), (1, 2), (2, 0))


def p1_basis(pts):
    x, y = pts[:, 0], pts[:, 1]
    vals = np.column_stack([1.0 - x - y, x, y])
    grads = np.empty((len(pts), 3, 2))
    grads[:, 0] = (-1.0, -1.0)
    grads[:, 1] = (1.0, 0.0)
    grads[:, 2] = (0.0, 1.0)
    return vals, grads


def p2_basis(pts):
    x, y = pts[:, 0], pts[:, 1]
    lam = np.column_stack([1.0 - x - y, x, y])
    dlam = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    n = len(pts)
    vals = np.empty((n, 6))
    grads = np.empty((n, 6, 2))
    for i in range(3):
        vals[:, i] = lam[:, i] * (2.0 * lam[:, i] - 1.0)
        grads[:, i] = (4.0 * lam[:, i] - 1.0)[:, None] * dlam[i]
    for k, (i, j) in enumerate(_P2_EDGES):
        vals[:, 3 + k] = 4.0 * lam[:, i] * lam[:, j]
        grads[:, 3 + k] = 4.0 * (lam[:, j][:, None] * dlam[i] + lam[:, i][:, None] * dlam[j])
    return vals, grads


class FeSpace:
    """P_k Lagrange space (k = 1 or 2) with precomputed quadrature tables.

    Vertex DOFs come first, in mesh vertex order; for P2 they are followed by
    one DOF per edge at its midpoint, numbered like ``mesh.edges``.
    """

    def __init__(self, mesh, degree=1, quad=None):
        if degree not in (1, 2):
            raise ConfigError(f"element degree must be 1 or 2, got {degree}", key="mesh.degree")
        if quad is None:
            quad = quad_rule(6)
        if not isinstance(quad, QuadRule):
            quad = quad_rule(int(quad))
        if quad.degree < 2 * degree:
            raise ConfigError(
                f"quadrature degree {quad.degree} < {2 * degree}: the quadrature mass matrix "
                "would differ from the exact one and the L2 projection would lose its contraction property",
                key="mesh.quad_degree",
            )
        self.mesh = mesh
        self.degree = degree
        self.quad = quad

        if degree == 1:
            self.elem_dofs = mesh.triangles.copy()
            self.dof_coords = mesh.vertices.copy()
            self.phi, self.dphi_ref = p1_basis(quad.points)
        else:
            self.elem_dofs = np.hstack([mesh.triangles, mesh.n_vertices + mesh.tri_edges])
            mids = mesh.vertices[mesh.edges].mean(axis=1)
            self.dof_coords = np.vstack([mesh.vertices, mids])
            self.phi, self.dphi_ref = p2_basis(quad.points)
        self.n_dofs = len(self.dof_coords)
        self.n_local = self.elem_dofs.shape[1]

    def __repr__(self):
        return f"FeSpace(P{self.degree}, n_dofs={self.n_dofs}, n_elem={self.mesh.n_triangles}, quad_deg={self.quad.degree})"

    @property
    def n_elements(self):
        return self.mesh.n_triangles

    @property
    def n_quad(self):
        return self.quad.n_points

    @property
    def qshape(self):
        return (self.n_elements, self.n_quad)

    @cached_property
    def dx(self):
        """(ne, nq) physical quadrature weights w_q * det_j."""
        return self.mesh.det_j[:, None] * self.quad.weights[None, :]

    @cached_property
    def quad_points(self):
        """(ne, nq, 2) physical coordinates of the quadrature points."""
        p0 = self.mesh.vertices[self.mesh.triangles[:, 0]]
        return p0[:, None, :] + np.einsum("eij,qj->eqi", self.mesh.jacobians, self.quad.points)

    @cached_property
    def dphi(self):
        """(ne, nq, nloc, 2) physical basis gradients."""
        return np.einsum("eij,qkj->eqki", self.mesh.inv_jt, self.dphi_ref)

    @cached_property
    def _pattern(self):
        """CSR structure of the element-coupling graph and the scatter map.

        ``scatter[e, i, j]`` is the CSR data slot that receives the local
        entry (i, j) of element e.
        """
        dofs = self.elem_dofs
        n = self.n_dofs
        rows = np.repeat(dofs[:, :, None], self.n_local, axis=2)
        cols = np.repeat(dofs[:, None, :], self.n_local, axis=1)
        key = (rows.astype(np.int64) * n + cols).ravel()
        uniq, inverse = np.unique(key, return_inverse=True)
        r = uniq // n
        c = uniq % n
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, r + 1, 1)
        indptr = np.cumsum(indptr)
        return indptr, c, inverse.reshape(dofs.shape[0], self.n_local, self.n_local)

    def csr_from_local(self, local):
        """Sum (ne, nloc, nloc) element matrices into a CSR matrix."""
        indptr, indices, scatter = self._pattern
        data = np.bincount(scatter.ravel(), weights=local.ravel(), minlength=len(indices))
        return sp.csr_matrix((data, indices.copy(), indptr.copy()), shape=(self.n_dofs, self.n_dofs))

    def vector_from_local(self, local):
        """Sum (ne, nloc) element vectors into a global vector."""
        return np.bincount(self.elem_dofs.ravel(), weights=local.ravel(), minlength=self.n_dofs)

    def interpolate(self, f):
        """Nodal interpolant of ``f(x, y)``."""
        return np.asarray(f(self.dof_coords[:, 0], self.dof_coords[:, 1]), dtype=float) * np.ones(self.n_dofs)

    def sample(self, f):
        """Evaluate ``f(x, y)`` at every quadrature point."""
        q = self.quad_points
        return np.asarray(f(q[..., 0], q[..., 1]), dtype=float) * np.ones(self.qshape)

    def integrate(self, qf):
        return float(np.sum(self.dx * qf))

    def qinner(self, a, b):
        """Quadrature inner product of two QuadFields."""
        return float(np.sum(self.dx * a * b))

    def qnorm(self, qf):
        return np.sqrt(self.qinner(qf, qf))


def build_space(mesh, degree=1, quad=None):
    return FeSpace(mesh, degree, quad)


def eval_at_quad(space, coeffs):
    """Values of a FE field at all quadrature points, shape (ne, nq)."""
    c = np.asarray(coeffs)
    if c.shape != (space.n_dofs,):
        raise ValueError(f"coefficient vector has shape {c.shape}, expected ({space.n_dofs},)")
    return c[space.elem_dofs] @ space.phi.T


def eval_grad_at_quad(space, coeffs):
    """Physical gradients at all quadrature points, shape (ne, nq, 2)."""
    c = np.asarray(coeffs)
    return np.einsum("ek,eqki->eqi", c[space.elem_dofs], space.dphi)


def l2_project(space, mass, qf, solver=None):
    """Quadrature-inner-product L2 projection of a QuadField onto the space.

    ``solver`` is any callable ``b -> c`` solving ``mass @ c = b``; by default
    a Jacobi-preconditioned CG at relative tolerance 1e-12 is used.
    """
    from .assembly import assemble_load
    from .linalg import solve_cg

    qf = np.asarray(qf, dtype=float)
    if qf.shape != space.qshape:
        raise ValueError(f"QuadField has shape {qf.shape}, expected {space.qshape}")
    b = assemble_load(space, qf)
    if solver is not None:
        return solver(b)
    x, _ = solve_cg(mass, b, tol=1e-12)
    return x
