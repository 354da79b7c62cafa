"""Bulk potentials and the quadratization transform.

With ``U = sqrt(F(u) + B)`` the potential energy becomes the quadratic
``int U^2 - B |Omega|`` and ``F'(u) = H(u) U`` with ``H = F' / sqrt(F + B)``.
All functions accept scalars or arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, PotentialDomainError


@dataclass(frozen=True)
class DoubleWell:
    """F(u) = (u^2 - 1)^2 / 4."""

    B: float = 1.0

    def __post_init__(self):
        if not self.B > 0:
            # F vanishes at the wells, so F + B > 0 needs B > 0
            raise ConfigError(f"double well needs B > 0, got {self.B}", key="problem.B")

    def F(self, u):
        u = np.asarray(u, dtype=float)
        return 0.25 * (u * u - 1.0) ** 2

    def dF(self, u):
        u = np.asarray(u, dtype=float)
        return u * u * u - u


@dataclass(frozen=True)
class FloryHuggins:
    """F(u) = theta/2 (u ln u + (1-u) ln(1-u)) + theta_c/2 u (1-u).

    ``u`` is clipped to ``[clamp_delta, 1 - clamp_delta]`` before evaluation.
    """

    theta: float
    theta_c: float
    B: float = 1.0
    clamp_delta: float = 1e-8

    def __post_init__(self):
        if not 0.0 < self.clamp_delta < 0.5:
            raise ConfigError(f"clamp_delta must lie in (0, 1/2), got {self.clamp_delta}", key="problem.clamp_delta")
        if self.B < 0:
            raise ConfigError(f"B must be nonnegative, got {self.B}", key="problem.B")
        s = np.linspace(self.clamp_delta, 1.0 - self.clamp_delta, 2001)
        rad = self.F(s) + self.B
        if np.min(rad) <= 0:
            k = int(np.argmin(rad))
            raise ConfigError(
                f"F(u) + B = {rad[k]:.6g} <= 0 at u = {s[k]:.6g}; increase B (currently {self.B})",
                key="problem.B",
            )

    def clamp(self, u):
        return np.clip(np.asarray(u, dtype=float), self.clamp_delta, 1.0 - self.clamp_delta)

    def F(self, u):
        u = self.clamp(u)
        v = 1.0 - u
        return 0.5 * self.theta * (u * np.log(u) + v * np.log(v)) + 0.5 * self.theta_c * u * v

    def dF(self, u):
        u = self.clamp(u)
        return 0.5 * self.theta * (np.log(u) - np.log1p(-u)) + 0.5 * self.theta_c * (1.0 - 2.0 * u)


def f_eval(p, u):
    return p.F(u)


def f_prime(p, u):
    return p.dF(u)


def _radicand(p, u):
    rad = p.F(u) + p.B
    bad = ~(rad > 0)
    if np.any(bad):
        uu = np.broadcast_to(np.asarray(u, dtype=float), np.shape(rad))
        k = np.flatnonzero(np.ravel(bad))[0]
        raise PotentialDomainError(
            f"F(u) + B <= 0 at u = {float(np.ravel(uu)[k])!r} with B = {p.B!r}"
        )
    return rad


def h_eval(p, u):
    """H(u) = F'(u) / sqrt(F(u) + B)."""
    return p.dF(u) / np.sqrt(_radicand(p, u))


def init_aux(p, u0):
    """Pointwise sqrt(F(u0) + B)."""
    return np.sqrt(_radicand(p, u0))


def make_potential(kind, B=1.0, theta=None, theta_c=None, clamp_delta=1e-8):
    kind = kind.lower().replace("-", "_")
    if kind in ("double_well", "doublewell"):
        return DoubleWell(B=float(B))
    if kind in ("flory_huggins", "floryhuggins", "log", "logarithmic"):
        if theta is None or theta_c is None:
            raise ConfigError("Flory-Huggins needs theta and theta_c", key="problem.theta")
        return FloryHuggins(float(theta), float(theta_c), B=float(B), clamp_delta=float(clamp_delta))
    raise ConfigError(f"unknown potential {kind!r}", key="problem.potential")


@dataclass(frozen=True)
class EquationCoeffs:
    """Coefficients of the gradient term, the bulk term and the mobility.

    Cahn-Hilliard reads ``u_t = div(M grad w)``, ``w = -c_grad lap u + c_pot F'(u)``;
    Allen-Cahn reads ``u_t = c_grad lap u - c_pot F'(u)``.
    """

    c_grad: float
    c_pot: float
    mobility: object = 1.0  # number, or callable u -> M(u)

    def __post_init__(self):
        if not self.c_grad > 0:
            raise ConfigError(f"c_grad must be positive, got {self.c_grad}", key="problem.eps")
        if not self.c_pot > 0:
            raise ConfigError(f"c_pot must be positive, got {self.c_pot}", key="problem.eps")
        if not callable(self.mobility) and not float(self.mobility) >= 0:
            raise ConfigError(f"mobility must be nonnegative, got {self.mobility}", key="problem.mobility")

    @property
    def constant_mobility(self):
        return not callable(self.mobility)

    def mobility_at(self, u):
        if callable(self.mobility):
            m = np.asarray(self.mobility(u), dtype=float)
            if np.any(m < 0):
                raise PotentialDomainError("mobility became negative")
            return m
        return float(self.mobility) * np.ones_like(np.asarray(u, dtype=float))

    @classmethod
    def standard_ch(cls, eps, mobility=1.0):
        return cls(eps * eps, 1.0, mobility)

    @classmethod
    def rescaled_ch(cls, eps, mobility=1.0):
        return cls(eps, 1.0 / eps, mobility)

    @classmethod
    def standard_ac(cls, eps):
        return cls(eps * eps, 1.0)

    @classmethod
    def rescaled_ac(cls, eps):
        return cls(1.0, 1.0 / (eps * eps))

    @classmethod
    def make(cls, equation, form, eps, mobility=1.0):
        key = (equation.lower(), form.lower())
        table = {
            ("ch", "standard"): lambda: cls.standard_ch(eps, mobility),
            ("ch", "rescaled"): lambda: cls.rescaled_ch(eps, mobility),
            ("ac", "standard"): lambda: cls.standard_ac(eps),
            ("ac", "rescaled"): lambda: cls.rescaled_ac(eps),
        }
        if key not in table:
            raise ConfigError(f"unknown equation/form {key}", key="problem.form")
        return table[key]()
