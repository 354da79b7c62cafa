"""One linear solve per time step, shared by the Cahn-Hilliard and Allen-Cahn steppers.

All three time discretizations are written as

    (a / dt) (x - u_base) + L(x, X) = source,
    X = U_base + H (x - u_base) / 2,

with

========  =====  ===================  ====================  =================
scheme    a      u_base               U_base                H frozen at
========  =====  ===================  ====================  =================
bdf1      1      u^n                  U^n                   u^n
cn        2      u^n                  U^n                   1.5 u^n - 0.5 u^n-1
bdf2      3/2    (4u^n - u^n-1) / 3   (4U^n - U^n-1) / 3    2 u^n - u^n-1
========  =====  ===================  ====================  =================

For ``cn`` the unknowns ``(x, X)`` are midpoint values and the endpoint is
recovered as ``2 x - u^n``. The source is sampled at ``t^n+1``, or for ``cn``
averaged over ``t^n`` and ``t^n+1``.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field, replace

import numpy as np

from .assembly import assemble_load, assemble_mass, assemble_stiffness
from .errors import IdentityCheckError
from .ieq import AuxState, EnergyReport, bdf2_energy, extrapolate
from .linalg import RecycledLU, SolveInfo, compose_blocks, relative_residual, solve
from .potential import EquationCoeffs, h_eval

SCHEMES = ("bdf1", "cn", "bdf2")
_A = {"bdf1": 1.0, "cn": 2.0, "bdf2": 1.5}

IDENTITY_TOL = 1e-9
CONTRACTION_TOL = 1e-12


@dataclass(frozen=True)
class StepConfig:
    """Parameters of a time stepper.

    Parameters
    ----------
    dt : float
    method : {1, 2, 3}
    scheme : {"bdf1", "cn", "bdf2"}
    eq : EquationCoeffs
    potential : DoubleWell or FloryHuggins
    solver : {"auto", "direct", "cg", "krylov", "recycled"}
        "auto" picks a sparse LU for block systems and CG for the SPD
        Allen-Cahn systems.
    source : callable (x, y, t) -> value, optional
        Right-hand side added to the evolution equation.
    bootstrap : bool
        Take a BDF1 first step for multi-step schemes instead of starting
        from ``u^-1 = u^0``.
    log_projected : bool
        For method 2, also report E(u, P U), which costs one projection.
    strict : bool
        Raise IdentityCheckError when an energy law or the mass balance fails.
    """

    dt: float
    method: int = 2
    scheme: str = "bdf1"
    eq: EquationCoeffs = field(default_factory=lambda: EquationCoeffs(1.0, 1.0))
    potential: object = None
    solver: str = "auto"
    source: object = None
    bootstrap: bool = False
    log_projected: bool = False
    strict: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.method not in (1, 2, 3):
            raise ValueError(f"method must be 1, 2 or 3, got {self.method}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class State:
    """Solution at one time level.

    ``u_prev`` is kept for multi-step schemes; ``w`` is the chemical
    potential of the last Cahn-Hilliard step (a midpoint value for ``cn``).
    """

    u: np.ndarray
    aux: AuxState
    w: np.ndarray | None = None
    u_prev: np.ndarray | None = None
    step: int = 0
    time: float = 0.0
    report: EnergyReport | None = None
    solve_info: SolveInfo | None = None


def initial_state(disc, u0, method, scheme="bdf1", u0_quad=None, cls=State):
    """State at t = 0.

    ``u0_quad`` are samples of the initial field used for the auxiliary
    variable; by default the finite element field is evaluated.
    """
    if u0_quad is None:
        u0_quad = disc.to_quad(u0)
    aux = disc.init_aux(method, u0_quad)
    multi = scheme != "bdf1"
    if multi:
        aux = aux.with_history()
    return cls(u=np.array(u0, dtype=float), aux=aux, u_prev=np.array(u0, dtype=float) if multi else None)


def _linear_solve(disc, A, b, cfg, spd, key, x0=None):
    method = cfg.solver
    if method == "auto":
        method = "cg" if spd else "direct"
    if method == "cg" and not spd:
        method = "direct"
    if method == "recycled":
        solver = disc.solver_cache.get(key)
        if solver is None:
            solver = disc.solver_cache[key] = RecycledLU()
        x, info = solver(A, b)
    else:
        x, info = solve(A, b, method=method, x0=x0)
    # independent check of the reported residual
    info.residual = relative_residual(A, x, b)
    return x, info


def advance(state, cfg, disc, equation):
    """Advance ``state`` by one step of ``cfg.scheme`` for ``equation`` ("ch" or "ac")."""
    t0 = _time.perf_counter()
    scheme = cfg.scheme
    if scheme != "bdf1" and cfg.bootstrap and state.step == 0:
        scheme = "bdf1"
    if equation == "ch" and scheme == "cn":
        raise ValueError("the Crank-Nicolson scheme is only provided for Allen-Cahn")
    m = cfg.method
    p = cfg.potential
    c = cfg.eq
    dt = cfg.dt
    space = disc.space
    G, D = disc.G, disc.D
    u = state.u
    aux = state.aux
    u_prev = state.u_prev if state.u_prev is not None else u
    nodal = m != 2

    Ub_n = aux.base()
    Ub_prev = aux.base_prev()
    if scheme == "bdf1":
        u_base, ustar, Ubase = u, u, Ub_n
    elif scheme == "cn":
        u_base, ustar, Ubase = u, extrapolate(u, u_prev, "cn"), Ub_n
    else:
        u_base = (4.0 * u - u_prev) / 3.0
        ustar = extrapolate(u, u_prev, "bdf2")
        Ubase = (4.0 * Ub_n - Ub_prev) / 3.0
    dte = dt / _A[scheme]

    us_q = disc.to_quad(ustar)
    ub_q = disc.to_quad(u_base)
    H = h_eval(p, us_q)
    Ubq = disc.aux_quad(Ubase, nodal)

    rhs_u = (G @ u_base) / dte
    if cfg.source is not None:
        t1 = state.time + dt
        if scheme == "cn":
            # half-step value of a given function: mean of its two end values
            src = lambda x, y: 0.5 * (cfg.source(x, y, state.time) + cfg.source(x, y, t1))
        else:
            src = lambda x, y: cfg.source(x, y, t1)
        rhs_u = rhs_u + assemble_load(space, space.sample(src))

    n = space.n_dofs
    w = None
    if equation == "ch":
        if c.constant_mobility:
            D_M = D * float(c.mobility)
        else:
            D_M = assemble_stiffness(space, c.mobility_at(us_q))
        if m == 1:
            G_H = assemble_mass(space, H)
            A = compose_blocks([
                [(G, 1.0 / dte), D_M, None],
                [(D, -c.c_grad), G, (G_H, -c.c_pot)],
                [(G_H, -0.5), None, G],
            ])
            b = np.concatenate([rhs_u, np.zeros(n), G @ Ubase - 0.5 * (G_H @ u_base)])
            sol, info = _linear_solve(disc, A, b, cfg, False, ("ch", m))
            x, w, X = sol[:n], sol[n:2 * n], sol[2 * n:]
        else:
            G_H2 = assemble_mass(space, H * H)
            A = compose_blocks([
                [(G, 1.0 / dte), D_M],
                [-c.c_grad * D - (0.5 * c.c_pot) * G_H2, G],
            ])
            b = np.concatenate([rhs_u, c.c_pot * assemble_load(space, H * (Ubq - 0.5 * H * ub_q))])
            sol, info = _linear_solve(disc, A, b, cfg, False, ("ch", m))
            x, w = sol[:n], sol[n:]
            X = Ubq + 0.5 * H * (disc.to_quad(x) - ub_q)
    else:
        if m == 1:
            G_H = assemble_mass(space, H)
            A = compose_blocks([
                [G / dte + c.c_grad * D, (G_H, c.c_pot)],
                [(G_H, -0.5), G],
            ])
            b = np.concatenate([rhs_u, G @ Ubase - 0.5 * (G_H @ u_base)])
            sol, info = _linear_solve(disc, A, b, cfg, False, ("ac", m))
            x, X = sol[:n], sol[n:]
        else:
            G_H2 = assemble_mass(space, H * H)
            A = G / dte + c.c_grad * D + (0.5 * c.c_pot) * G_H2
            b = rhs_u - c.c_pot * assemble_load(space, H * (Ubq - 0.5 * H * ub_q))
            x, info = _linear_solve(disc, A, b, cfg, True, ("ac", m), x0=ustar)
            X = Ubq + 0.5 * H * (disc.to_quad(x) - ub_q)

    # X is nodal for method 1 and quadrature samples otherwise
    Xq = disc.aux_quad(X, m == 1)
    Ub_nq = disc.aux_quad(Ub_n, nodal)
    if scheme == "cn":
        u_new = 2.0 * x - u
        if m == 1:
            U_new = 2.0 * X - Ub_n
        else:
            U_new = 2.0 * Xq - Ub_nq
    else:
        u_new = x
        U_new = X
    shadow_new = disc.project(U_new) if m == 3 else None

    if scheme == "bdf1" and cfg.scheme == "bdf1":
        new_aux = AuxState(m, U_new, shadow_new)
    else:
        new_aux = AuxState(m, U_new, shadow_new, U_prev=aux.U, shadow_prev=aux.shadow)

    # energy law of the step, every norm in the quadrature inner product
    Unq = disc.aux_quad(U_new, m == 1)
    e_exact = disc.energy(u_new, Unq)
    du = u_new - u
    if equation == "ch":
        D_w = D_M @ w
        flux = dt * float(w @ D_w)
    if scheme == "bdf1":
        e_prev = disc.energy(u, Ubq)
        diss = [
            c.c_pot * space.qinner(Xq - Ubq, Xq - Ubq),
            0.5 * c.c_grad * float(du @ (D @ du)),
            flux if equation == "ch" else float(du @ (G @ du)) / dt,
        ]
        e_next = e_exact
    elif scheme == "cn":
        e_prev = disc.energy(u, Ubq)
        diss = [float(du @ (G @ du)) / dt]
        e_next = e_exact
    else:
        Ub_pq = disc.aux_quad(Ub_prev, nodal)
        e_prev = bdf2_energy(disc, u, u_prev, Ub_nq, Ub_pq)
        e_next = bdf2_energy(disc, x, u, Xq, Ub_nq)
        d2 = x - ustar
        Ustar = 2.0 * Ub_nq - Ub_pq
        if equation == "ch":
            tdiss = flux
        else:
            q = 3.0 * x - 4.0 * u + u_prev
            tdiss = float(q @ (G @ q)) / (4.0 * dt)
        diss = [
            tdiss,
            0.25 * c.c_grad * float(d2 @ (D @ d2)),
            0.5 * c.c_pot * space.qinner(Xq - Ustar, Xq - Ustar),
        ]
    residual = e_next - e_prev + sum(diss)
    scale = 1.0 + abs(e_prev)

    g, a = disc.energy_parts(u_new, disc.to_quad(shadow_new) if m == 3 else Unq)
    rep = EnergyReport(
        e_total=g + a, e_grad=g, e_aux=a, e_exact=e_exact, mass=disc.mass(u_new),
        diss_residual=residual, residual_scale=scale,
    )
    if m == 3:
        rep.contraction_slack = e_exact - rep.e_total
        rep.e_projected = rep.e_total
    elif m == 2 and cfg.log_projected:
        rep.e_projected = disc.energy(u_new, disc.to_quad(disc.project(Unq)))
    if cfg.scheme == "bdf2":
        base_new = disc.aux_quad(new_aux.base(), nodal)
        rep.e_bdf2 = bdf2_energy(disc, u_new, u, base_new, Ub_nq)

    new_state = replace(
        state,
        u=u_new,
        aux=new_aux,
        w=w,
        u_prev=u if cfg.scheme != "bdf1" else None,
        step=state.step + 1,
        time=state.time + dt,
        report=rep,
        solve_info=info,
    )
    info.wall_ms = 1e3 * (_time.perf_counter() - t0)
    if cfg.strict:
        check_step(state, new_state, cfg, equation)
    return new_state


def check_step(old, new, cfg, equation):
    """Runtime assertions of the per-step laws (used in strict mode)."""
    rep = new.report
    if cfg.source is None and abs(rep.diss_residual) > IDENTITY_TOL * rep.residual_scale:
        raise IdentityCheckError(
            f"energy-law residual {rep.diss_residual:.3e} exceeds {IDENTITY_TOL:g} x {rep.residual_scale:.3e}",
            step=new.step, time=new.time,
        )
    if rep.contraction_slack is not None and rep.contraction_slack < -CONTRACTION_TOL * max(1.0, abs(rep.e_exact)):
        raise IdentityCheckError(
            f"projected energy exceeds the exact one by {-rep.contraction_slack:.3e}", step=new.step, time=new.time
        )
    if equation == "ch" and cfg.source is None and old.report is not None:
        m0 = old.report.mass
        if abs(rep.mass - m0) > 1e-8 * (1.0 + abs(m0)):
            raise IdentityCheckError(f"mass drifted from {m0!r} to {rep.mass!r}", step=new.step, time=new.time)
