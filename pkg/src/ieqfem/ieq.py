"""Auxiliary-variable bookkeeping, discrete energies and energy-law residuals.

Three representations of the auxiliary variable ``U`` are supported:

* method 1: ``U`` is a finite element function (nodal coefficients);
* method 2: ``U`` lives only at the quadrature points;
* method 3: as method 2, plus the L2 projection ``U_h = P U`` which is what
  the next step builds on.

The "base" representation is the one the next time step reads: the nodal
vector for method 1, the samples for method 2 and the projection for
method 3.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .assembly import AssembledOperators
from .fem import eval_at_quad, l2_project
from .linalg import MassSolver
from .potential import init_aux

METHODS = (1, 2, 3)


def extrapolate(v_n, v_nm1, kind="bdf2"):
    """Explicit second-order predictor: ``2 v_n - v_nm1`` or ``1.5 v_n - 0.5 v_nm1``."""
    if np.shape(v_n) != np.shape(v_nm1):
        raise ValueError(f"shape mismatch {np.shape(v_n)} vs {np.shape(v_nm1)}")
    kind = kind.lower()
    if kind == "bdf2":
        return 2.0 * v_n - v_nm1
    if kind == "cn":
        return 1.5 * v_n - 0.5 * v_nm1
    raise ValueError(f"unknown extrapolation kind {kind!r}")


def update_aux_pointwise(U_base, H, u_new, u_old, coeff=0.5):
    """``U_base + coeff * H * (u_new - u_old)`` evaluated pointwise."""
    return U_base + coeff * H * (u_new - u_old)


@dataclass(frozen=True)
class AuxState:
    """Auxiliary variable in the representation of ``method``.

    ``U`` is nodal for method 1 and quadrature samples otherwise; ``shadow``
    holds the projection for method 3. ``U_prev``/``shadow_prev`` keep the
    previous step for multi-step schemes.
    """

    method: int
    U: np.ndarray
    shadow: np.ndarray | None = None
    U_prev: np.ndarray | None = None
    shadow_prev: np.ndarray | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be 1, 2 or 3, got {self.method}")
        if self.method == 3 and self.shadow is None:
            raise ValueError("method 3 needs the projected shadow")

    @property
    def nodal_base(self):
        return self.method != 2

    def base(self):
        return self.shadow if self.method == 3 else self.U

    def base_prev(self):
        prev = self.shadow_prev if self.method == 3 else self.U_prev
        return self.base() if prev is None else prev

    @property
    def has_history(self):
        return self.U_prev is not None

    def with_history(self):
        """Copy whose history equals the current value (multi-step startup)."""
        return replace(self, U_prev=self.U, shadow_prev=self.shadow)


class Discretization:
    """Space, constant matrices, projection solver and energy functional.

    Parameters
    ----------
    space : FeSpace
    potential : DoubleWell or FloryHuggins
    coeffs : EquationCoeffs
    projection_solver : {"cg", "direct"}
        Solver for the mass-matrix system of the L2 projection.
    """

    def __init__(self, space, potential, coeffs, projection_solver="cg"):
        self.space = space
        self.potential = potential
        self.coeffs = coeffs
        self.ops = AssembledOperators(space)
        # quadrature measure, so that U = sqrt(B) cancels the B term exactly
        self.measure = float(np.sum(space.dx))
        self._mass_solver = MassSolver(self.ops.G, method=projection_solver)
        self.solver_cache = {}

    @property
    def G(self):
        return self.ops.G

    @property
    def D(self):
        return self.ops.D

    def to_quad(self, coeffs):
        return eval_at_quad(self.space, coeffs)

    def project(self, qf):
        return l2_project(self.space, self.G, qf, solver=self._mass_solver)

    @property
    def projection_iterations(self):
        return self._mass_solver.last_iterations

    def aux_quad(self, U, nodal):
        return self.to_quad(U) if nodal else U

    def energy_parts(self, u, Uq):
        """(gradient part, auxiliary part) of E(u, U) with U given at quadrature points."""
        c = self.coeffs
        e_grad = 0.5 * c.c_grad * float(u @ (self.D @ u))
        e_aux = c.c_pot * (self.space.qinner(Uq, Uq) - self.potential.B * self.measure)
        return e_grad, e_aux

    def energy(self, u, Uq):
        g, a = self.energy_parts(u, Uq)
        return g + a

    def original_energy(self, u):
        """Energy with the true potential, for comparison only."""
        uq = self.to_quad(u)
        c = self.coeffs
        return 0.5 * c.c_grad * float(u @ (self.D @ u)) + c.c_pot * self.space.integrate(self.potential.F(uq))

    def mass(self, u):
        return float(np.sum(self.G @ u))

    def init_aux(self, method, u0_quad):
        """Auxiliary variable at t = 0 from samples of the initial field."""
        Uq = init_aux(self.potential, u0_quad)
        if method == 1:
            return AuxState(1, self.project(Uq))
        if method == 2:
            return AuxState(2, Uq)
        return AuxState(3, Uq, shadow=self.project(Uq))


@dataclass
class EnergyReport:
    """Energies after one step.

    ``e_total`` is the energy the scheme provably dissipates: the exact
    energy for methods 1 and 2 and the energy of the projection for
    method 3. ``e_exact`` is always E(u, U) in the stored representation.
    """

    e_total: float
    e_grad: float
    e_aux: float
    e_exact: float
    mass: float
    e_projected: float | None = None
    e_bdf2: float | None = None
    diss_residual: float = 0.0
    residual_scale: float = 1.0
    contraction_slack: float | None = None


def energy(disc, u, aux, project=False):
    """EnergyReport for state ``(u, aux)`` without any step information."""
    Uq = disc.aux_quad(aux.U, aux.method == 1)
    e_exact = disc.energy(u, Uq)
    if aux.method == 3:
        g, a = disc.energy_parts(u, disc.to_quad(aux.shadow))
    else:
        g, a = disc.energy_parts(u, Uq)
    rep = EnergyReport(e_total=g + a, e_grad=g, e_aux=a, e_exact=e_exact, mass=disc.mass(u))
    if project and aux.method == 2:
        rep.e_projected = disc.energy(u, disc.to_quad(disc.project(Uq)))
    if aux.method == 3:
        rep.contraction_slack = e_exact - rep.e_total
        rep.e_projected = rep.e_total
    return rep


def bdf2_energy(disc, u, u_prev, Uq, Uq_prev):
    """Averaged energy ``(E(u, U) + E(2u - u_prev, 2U - U_prev)) / 2``."""
    return 0.5 * (disc.energy(u, Uq) + disc.energy(2.0 * u - u_prev, 2.0 * Uq - Uq_prev))


def dissipation_residual(e_prev, e_next, dissipation):
    """Energy-law residual ``e_next - e_prev + sum(dissipation)``.

    Every entry of ``dissipation`` is a nonnegative quantity; the sum equals
    ``e_prev - e_next`` exactly for the schemes in this package.
    """
    return e_next - e_prev + float(sum(dissipation))
