"""Manufactured solutions, error norms, observed orders and the projected-energy monitor."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fem import eval_at_quad
from .potential import DoubleWell, EquationCoeffs


# Cahn-Hilliard on [-pi, 3pi]^2 with eps = 1, M = 1, double well:
# u = mu = 0.1 exp(-t/4) sin(x/2) sin(y/2), u_t = lap w + s.
def _mu(x, y, t):
    return 0.1 * np.exp(-0.25 * t) * np.sin(0.5 * x) * np.sin(0.5 * y)


def mms_exact_ch(x, y, t):
    return _mu(x, y, t)


def mms_source_ch(x, y, t, eps=1.0):
    mu = _mu(x, y, t)
    a = 0.1 * np.exp(-0.25 * t)
    nu = (a * np.cos(0.5 * x) * np.sin(0.5 * y)) ** 2 + (a * np.sin(0.5 * x) * np.cos(0.5 * y)) ** 2
    return -mu / 4 + eps**2 * mu / 4 - 1.5 * mu * nu + 1.5 * mu**3 - mu / 2


# Allen-Cahn on [-1, 1]^2, u_t = lap u - F'(u) + s with u = e^t cos(pi x) cos(pi y).
# Then u_t = u and lap u = -2 pi^2 u, so s = 2 pi^2 u + u^3.
def mms_exact_ac(x, y, t):
    return np.exp(t) * np.cos(np.pi * x) * np.cos(np.pi * y)


def mms_source_ac(x, y, t):
    u = mms_exact_ac(x, y, t)
    return 2.0 * np.pi**2 * u + u**3


@dataclass(frozen=True)
class MmsCase:
    equation: str
    exact_u: object
    source: object
    domain: tuple
    eq_coeffs: EquationCoeffs
    potential: object

    def check_neumann(self, n=64, t=0.0, h=1e-5):
        """Largest normal derivative of ``exact_u`` along the boundary.

        Central differences straddling the boundary; the exact solutions are
        analytic, so evaluating just outside the domain is harmless.
        """
        x0, x1, y0, y1 = self.domain
        s = np.linspace(0.0, 1.0, n)
        xs = x0 + (x1 - x0) * s
        ys = y0 + (y1 - y0) * s
        f = self.exact_u
        out = 0.0
        for xb in (x0, x1):
            xv = np.full(n, xb)
            out = max(out, float(np.max(np.abs(f(xv + h, ys, t) - f(xv - h, ys, t)))) / (2 * h))
        for yb in (y0, y1):
            yv = np.full(n, yb)
            out = max(out, float(np.max(np.abs(f(xs, yv + h, t) - f(xs, yv - h, t)))) / (2 * h))
        return out


def ch_case(B=1.0):
    return MmsCase(
        "ch", mms_exact_ch, mms_source_ch, (-math.pi, 3 * math.pi, -math.pi, 3 * math.pi),
        EquationCoeffs.standard_ch(1.0), DoubleWell(B),
    )


def ac_case(B=1.0):
    return MmsCase(
        "ac", mms_exact_ac, mms_source_ac, (-1.0, 1.0, -1.0, 1.0),
        EquationCoeffs.rescaled_ac(1.0), DoubleWell(B),
    )


def mms_case(equation, B=1.0):
    if equation == "ch":
        return ch_case(B)
    if equation == "ac":
        return ac_case(B)
    raise ValueError(f"no manufactured solution for {equation!r}")


def l2_error(space, coeffs, exact, t):
    """Quadrature L2 norm of ``u_h - exact(., ., t)``."""
    q = space.quad_points
    e = eval_at_quad(space, coeffs) - exact(q[..., 0], q[..., 1], t)
    return float(np.sqrt(np.sum(space.dx * e * e)))


def compute_rates(errors, refinement_factor=2.0):
    """Observed orders ``log(e_i / e_i+1) / log(factor)``."""
    e = np.asarray(errors, dtype=float)
    if len(e) < 2:
        raise ValueError("need at least two errors")
    if np.any(~(e > 0)):
        raise ValueError(f"errors must be positive, got {errors}")
    if not refinement_factor > 1:
        raise ValueError(f"refinement factor must exceed 1, got {refinement_factor}")
    return list(np.log(e[:-1] / e[1:]) / math.log(refinement_factor))


def projection_condition_margin(energy, energy_projected):
    """Per-step margin of the sufficient condition for a decaying projected energy.

    With ``dE[n] = |E[n] - E[n-1]|`` and ``err[n] = |E[n] - Ep[n]|`` the
    margin at step n (1 <= n < N-1) is ``max(dE[n+1], dE[n]) / 2 - err[n]``.
    The first and last entries are NaN.
    """
    E = np.asarray(energy, dtype=float)
    Ep = np.asarray(energy_projected, dtype=float)
    out = np.full(len(E), np.nan)
    if len(E) < 3:
        return out
    dE = np.abs(np.diff(E))
    err = np.abs(E - Ep)
    for n in range(1, len(E) - 1):
        out[n] = 0.5 * max(dE[n], dE[n - 1]) - err[n]
    return out


def monotone_violations(values, window_mask=None, rtol=1e-12):
    """Indices n where ``values[n+1] > values[n]`` (beyond round-off).

    If ``window_mask`` is given, only increments with both endpoints inside
    the mask count.
    """
    v = np.asarray(values, dtype=float)
    inc = np.diff(v) > rtol * np.maximum(1.0, np.abs(v[:-1]))
    if window_mask is not None:
        mk = np.asarray(window_mask, dtype=bool)
        inc &= mk[:-1] & mk[1:]
    return list(np.flatnonzero(inc))
