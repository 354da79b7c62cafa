"""Symmetric quadrature rules with positive weights on the reference triangle.

The reference triangle has vertices (0,0), (1,0), (0,1). Weights sum to its
area 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class QuadRule:
    points: np.ndarray  # (nq, 2) reference coordinates
    weights: np.ndarray  # (nq,)
    degree: int

    @property
    def n_points(self):
        return len(self.weights)


def _orbit(kind, *params):
    """Barycentric points of one symmetry orbit."""
    if kind == "s3":
        return [(1 / 3, 1 / 3, 1 / 3)]
    if kind == "s21":
        (a,) = params
        b = 1.0 - 2.0 * a
        return [(a, a, b), (a, b, a), (b, a, a)]
    if kind == "s111":
        a, b = params
        c = 1.0 - a - b
        return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]
    raise ValueError(kind)


# (degree, [(orbit kind, params, weight per point normalised to total 1)])
# Dunavant (1985) rules 1, 2, 4, 5, 6; all weights positive.
_TABLE = {
    1: [("s3", (), 1.0)],
    2: [("s21", (1 / 6,), 1 / 3)],
    4: [
        ("s21", (0.445948490915965,), 0.223381589678011),
        ("s21", (0.091576213509771,), 0.109951743655322),
    ],
    5: [
        ("s3", (), 0.225),
        ("s21", (0.470142064105115,), 0.132394152788506),
        ("s21", (0.101286507323456,), 0.125939180544827),
    ],
    6: [
        ("s21", (0.249286745170910,), 0.116786275726379),
        ("s21", (0.063089014491502,), 0.050844906370207),
        ("s111", (0.053145049844817, 0.310352451033784), 0.082851075618374),
    ],
}

# degree 3 has no Dunavant rule with positive weights; the degree-4 rule covers it
_ALIAS = {3: 4}


def _build(degree):
    bary = []
    weights = []
    for kind, params, w in _TABLE[degree]:
        pts = _orbit(kind, *params)
        bary.extend(pts)
        weights.extend([w] * len(pts))
    bary = np.array(bary)
    weights = np.array(weights)
    weights = 0.5 * weights / weights.sum()
    # barycentric (l0, l1, l2) -> reference (x, y) = (l1, l2)
    return QuadRule(points=bary[:, 1:].copy(), weights=weights, degree=degree)


def quad_rule(degree=6):
    """Return a rule integrating every polynomial of total degree <= ``degree``.

    The returned ``degree`` field is the rule's actual exactness, which may
    exceed the request.
    """
    if degree not in (1, 2, 3, 4, 5, 6):
        raise ConfigError(f"unsupported quadrature degree {degree}; use 1..6", key="mesh.quad_degree")
    return _build(_ALIAS.get(degree, degree))
