"""Structured triangulations of axis-aligned rectangles."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError

SIDES = ("bottom", "right", "top", "left")


@dataclass(frozen=True)
class ElemGeom:
    jacobian: np.ndarray
    det_j: float
    inv_jt: np.ndarray
    area: float


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangle mesh of the rectangle ``domain = (x0, x1, y0, y1)``.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counterclockwise vertex triples
    boundary_edges : (nb, 2) int array of vertex pairs
    boundary_tags : (nb,) array of side names, one of ``SIDES``
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    domain: tuple

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def rect_area(self):
        x0, x1, y0, y1 = self.domain
        return (x1 - x0) * (y1 - y0)

    @cached_property
    def measure(self):
        """|Omega| as the sum of element areas."""
        return float(self.element_areas.sum())

    @cached_property
    def jacobians(self):
        """(nt, 2, 2) affine maps from the reference triangle."""
        p = self.vertices[self.triangles]
        jac = np.empty((self.n_triangles, 2, 2))
        jac[:, :, 0] = p[:, 1] - p[:, 0]
        jac[:, :, 1] = p[:, 2] - p[:, 0]
        return jac

    @cached_property
    def det_j(self):
        j = self.jacobians
        return j[:, 0, 0] * j[:, 1, 1] - j[:, 0, 1] * j[:, 1, 0]

    @cached_property
    def inv_jt(self):
        j = self.jacobians
        det = self.det_j
        out = np.empty_like(j)
        # inverse transpose of [[a, b], [c, d]] is [[d, -c], [-b, a]] / det
        out[:, 0, 0] = j[:, 1, 1] / det
        out[:, 0, 1] = -j[:, 1, 0] / det
        out[:, 1, 0] = -j[:, 0, 1] / det
        out[:, 1, 1] = j[:, 0, 0] / det
        return out

    @cached_property
    def element_areas(self):
        return 0.5 * self.det_j

    @cached_property
    def _edge_data(self):
        tri = self.triangles
        local = np.array([[0, 1], [1, 2], [2, 0]])
        pairs = np.sort(tri[:, local].reshape(-1, 2), axis=1)
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        return edges, inverse.reshape(-1, 3)

    @property
    def edges(self):
        """(ne, 2) sorted vertex pairs, lexicographically ordered."""
        return self._edge_data[0]

    @property
    def tri_edges(self):
        """(nt, 3) global edge index of local edges (v0,v1), (v1,v2), (v2,v0)."""
        return self._edge_data[1]

    @property
    def n_edges(self):
        return len(self.edges)

    def edge_incidence(self):
        """Number of triangles sharing each edge."""
        return np.bincount(self.tri_edges.ravel(), minlength=self.n_edges)


def build_rect_mesh(domain, nx, ny):
    """Split an ``nx`` x ``ny`` grid of cells into 2*nx*ny triangles.

    Every cell is cut along its lower-left to upper-right diagonal. Vertices
    are numbered row by row, triangles cell by cell (lower, then upper).
    """
    x0, x1, y0, y1 = (float(v) for v in domain)
    if int(nx) != nx or nx < 1:
        raise ConfigError(f"need a positive subdivision count, got {nx}", key="mesh.nx")
    if int(ny) != ny or ny < 1:
        raise ConfigError(f"need a positive subdivision count, got {ny}", key="mesh.ny")
    if not (x1 > x0 and y1 > y0):
        raise ConfigError(f"degenerate rectangle {domain}", key="mesh.domain")
    nx, ny = int(nx), int(ny)

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    I, J = np.meshgrid(np.arange(nx), np.arange(ny))
    I, J = I.ravel(), J.ravel()
    v00, v10, v01, v11 = vid(I, J), vid(I + 1, J), vid(I, J + 1), vid(I + 1, J + 1)
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)

    i = np.arange(nx)
    j = np.arange(ny)
    bedges = [
        np.column_stack([vid(i, 0), vid(i + 1, 0)]),
        np.column_stack([vid(nx, j), vid(nx, j + 1)]),
        np.column_stack([vid(i + 1, ny), vid(i, ny)]),
        np.column_stack([vid(0, j + 1), vid(0, j)]),
    ]
    tags = np.concatenate([np.full(len(e), side) for e, side in zip(bedges, SIDES)])

    return Mesh(
        vertices=vertices,
        triangles=triangles.astype(np.int64),
        boundary_edges=np.concatenate(bedges).astype(np.int64),
        boundary_tags=tags,
        domain=(x0, x1, y0, y1),
    )


def element_geometry(mesh, elem):
    if not 0 <= elem < mesh.n_triangles:
        raise IndexError(f"element {elem} out of range [0, {mesh.n_triangles})")
    det = float(mesh.det_j[elem])
    return ElemGeom(
        jacobian=mesh.jacobians[elem].copy(),
        det_j=det,
        inv_jt=mesh.inv_jt[elem].copy(),
        area=0.5 * det,
    )


def single_triangle_mesh(p0, p1, p2):
    """One-element mesh, used by tests and dense oracles."""
    verts = np.array([p0, p1, p2], dtype=float)
    xs, ys = verts[:, 0], verts[:, 1]
    edges = np.array([[0, 1], [1, 2], [2, 0]])
    return Mesh(
        vertices=verts,
        triangles=np.array([[0, 1, 2]]),
        boundary_edges=edges,
        boundary_tags=np.array(["boundary"] * 3),
        domain=(xs.min(), xs.max(), ys.min(), ys.max()),
    )
