"""Simulation orchestration: problem setup, time loop, convergence studies, benchmarks."""

from __future__ import annotations

import logging
import math
import time as _time
from dataclasses import dataclass, field, replace

import numpy as np

from .expr import parse_expression
from .fem import FeSpace
from .ieq import Discretization, energy
from .mesh import build_rect_mesh
from .mms import compute_rates, l2_error, mms_case, monotone_violations, projection_condition_margin
from .output import TraceRow, write_csv, write_manifest, write_vtk
from .potential import EquationCoeffs, make_potential
from .quadrature import quad_rule
from .stepping import StepConfig, advance, initial_state

log = logging.getLogger(__name__)


# initial data ----------------------------------------------------------------

def four_circles(eps):
    def f(x, y):
        out = np.ones(np.broadcast(x, y).shape)
        for cx, cy in ((0.3, 0.0), (-0.3, 0.0), (0.0, 0.3), (0.0, -0.3)):
            out = out * np.tanh(((x - cx) ** 2 + (y - cy) ** 2 - 0.2**2) / eps)
        return out
    return f


def three_circles(eps):
    r1 = r3 = 2.0 - 1.5 * eps

    def f(x, y):
        d1 = np.hypot(x, y - 2.0) - r1
        d2 = np.hypot(x, y) - 1.0
        d3 = np.hypot(x, y + 2.0) - r3
        d = np.maximum(np.maximum(-d1, d2), -d3)
        return -np.tanh(d / (math.sqrt(2.0) * eps))
    return f


def step_square(x, y):
    return np.where((np.abs(x) <= 0.2) & (np.abs(y) <= 0.2), 0.71, 0.69)


def sine_ramp(x, y):
    x1 = math.sqrt(2.0) / 20.0
    inner = -np.sin(np.pi * np.clip(x, -x1, x1) / (2.0 * x1))
    return np.where(x < -x1, 1.0, np.where(x > x1, -1.0, inner)) + 0.0 * y


def random_field(n, seed, amplitude=0.1, offset=0.0):
    """``amplitude * (2 xi - 1) + offset`` with xi uniform on [0, 1) from PCG64."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return amplitude * (2.0 * rng.random(n) - 1.0) + offset


def initial_function(cfg):
    """Closed-form initial data ``f(x, y)``, or None for random data."""
    ini = cfg.initial
    if ini.value is not None:
        v = float(ini.value)
        return lambda x, y: np.full(np.broadcast(x, y).shape, v)
    if ini.expression is not None:
        g = parse_expression(ini.expression)
        return lambda x, y: g(x, y, 0.0)
    name = ini.builtin
    if name == "four_circles":
        return four_circles(cfg.problem.eps)
    if name == "three_circles":
        return three_circles(cfg.problem.eps)
    if name == "step":
        return step_square
    if name == "sine_ramp":
        return sine_ramp
    return None


# problem setup ---------------------------------------------------------------

@dataclass
class Problem:
    disc: Discretization
    step_cfg: StepConfig
    equation: str
    u0: np.ndarray
    u0_quad: np.ndarray


def build_problem(cfg):
    p = cfg.problem
    mesh = build_rect_mesh(cfg.mesh.domain, cfg.mesh.nx, cfg.mesh.ny)
    space = FeSpace(mesh, cfg.mesh.degree, quad_rule(cfg.mesh.quad_degree))
    pot = make_potential(p.potential, B=p.B, theta=p.theta, theta_c=p.theta_c, clamp_delta=p.clamp_delta)
    coeffs = EquationCoeffs.make(p.equation, p.form, p.eps, p.mobility)
    disc = Discretization(space, pot, coeffs)
    f = initial_function(cfg)
    if f is None:
        u0 = random_field(space.n_dofs, cfg.initial.seed, cfg.initial.amplitude, cfg.initial.offset)
        u0_quad = disc.to_quad(u0)
    else:
        u0_quad = space.sample(f)
        u0 = disc.project(u0_quad) if cfg.initial.project else space.interpolate(f)
    t = cfg.time
    step_cfg = StepConfig(
        dt=t.dt, method=t.method, scheme=t.scheme, eq=coeffs, potential=pot, solver=t.solver,
        bootstrap=t.bdf2_bootstrap, log_projected=cfg.output.log_projected and t.method == 2, strict=t.strict,
    )
    return Problem(disc, step_cfg, p.equation, u0, u0_quad)


# time loop -------------------------------------------------------------------

@dataclass
class RunResult:
    rows: list
    state: object
    margin_counterexamples: list = field(default_factory=list)
    wall_s: float = 0.0


def _row(state, dt, rep, info=None, wall=None):
    return TraceRow(
        step=state.step, t=state.step * dt, mass=rep.mass, energy=rep.e_total,
        energy_projected=rep.e_projected, energy_bdf2=rep.e_bdf2, diss_residual=rep.diss_residual,
        linsolve_iters=0 if info is None else info.iterations, wall_ms=wall,
    )


def run_simulation(cfg, problem=None, n_steps=None, on_step=None):
    """Run the time loop of ``cfg``; writes the outputs it names.

    Returns a RunResult. Errors from the steppers propagate with the step
    index attached to their message.
    """
    pb = build_problem(cfg) if problem is None else problem
    disc, sc = pb.disc, pb.step_cfg
    state = initial_state(disc, pb.u0, sc.method, sc.scheme, pb.u0_quad)
    rep0 = energy(disc, state.u, state.aux, project=sc.log_projected)
    if sc.scheme == "bdf2":
        rep0.e_bdf2 = rep0.e_total
    rows = [_row(state, sc.dt, rep0, wall=0.0 if cfg.output.wall_clock else None)]
    nsteps = cfg.n_steps if n_steps is None else n_steps
    out = cfg.output
    t_start = _time.perf_counter()
    _snapshot(cfg, disc, state)
    for _ in range(nsteps):
        try:
            state = advance(state, sc, disc, pb.equation)
        except Exception as exc:
            exc.args = (f"step {state.step + 1}, t = {(state.step + 1) * sc.dt:.6g}: {exc}",) + exc.args[1:]
            raise
        info = state.solve_info
        rows.append(_row(state, sc.dt, state.report, info, info.wall_ms if out.wall_clock else None))
        if out.vtk_every and state.step % out.vtk_every == 0:
            _snapshot(cfg, disc, state)
        if on_step is not None:
            on_step(state)
    wall = _time.perf_counter() - t_start

    bad = []
    if sc.method == 2 and sc.log_projected and len(rows) >= 3:
        E = [r.energy for r in rows]
        Ep = [r.energy_projected for r in rows]
        margin = projection_condition_margin(E, Ep)
        for r, mg in zip(rows, margin):
            r.condition_margin = None if np.isnan(mg) else float(mg)
        bad = monotone_violations(Ep, window_mask=np.nan_to_num(margin, nan=-1.0) >= 0)
    if out.csv:
        write_csv(out.csv, rows)
    if out.manifest:
        extra = {"steps": nsteps, "n_dofs": disc.space.n_dofs}
        if cfg.mesh.degree == 2 and out.vtk_prefix:
            extra["note"] = "P2 fields in VTK snapshots are sampled at mesh vertices only"
        write_manifest(out.manifest, cfg.to_dict(), extra)
    return RunResult(rows, state, bad, wall)


def _snapshot(cfg, disc, state):
    out = cfg.output
    if not out.vtk_prefix:
        return
    if state.step and not out.vtk_every:
        return
    fields = {"u": state.u}
    if state.w is not None:
        fields["w"] = state.w
    write_vtk(f"{out.vtk_prefix}_{state.step:06d}.vtk", disc.space.mesh, fields, title=f"t={state.time:.9g}")


# manufactured-solution studies ----------------------------------------------

TEMPORAL_SETUP = {"ch": {"n": 48, "degree": 2}, "ac": {"n": 64, "degree": 2}}
TEMPORAL_DTS = (0.2, 0.1, 0.05, 0.025)


@dataclass
class MmsTable:
    equation: str
    scheme: str
    method: int
    mode: str
    params: list
    errors: list
    rates: list
    exact_errors: list = field(default_factory=list)
    exact_rates: list = field(default_factory=list)
    margin_counterexamples: int = 0

    def format(self):
        label = "dt" if self.mode == "temporal" else "n"
        head = f"{self.equation} {self.scheme} method {self.method} ({self.mode})"
        lines = [head, f"{label:>10s} {'error':>14s} {'rate':>8s} {'exact err':>14s} {'rate':>8s}"]
        for i, prm in enumerate(self.params):
            r = f"{self.rates[i - 1]:8.3f}" if i else " " * 8
            ee = f"{self.exact_errors[i]:14.6e}" if self.exact_errors else ""
            er = f"{self.exact_rates[i - 1]:8.3f}" if (i and self.exact_rates) else ""
            lines.append(f"{prm:>10g} {self.errors[i]:14.6e} {r} {ee} {er}")
        return "\n".join(lines)


def _mms_run(case, space, disc, scheme, method, dt, t_end, solver, log_projected=False):
    q0 = space.sample(lambda x, y: case.exact_u(x, y, 0.0))
    u0 = disc.project(q0)
    sc = StepConfig(
        dt=dt, method=method, scheme=scheme, eq=case.eq_coeffs, potential=case.potential,
        solver=solver, source=case.source, bootstrap=(scheme == "bdf2"), log_projected=log_projected,
    )
    state = initial_state(disc, u0, method, scheme, q0)
    E, Ep = [], []
    for _ in range(int(round(t_end / dt))):
        state = advance(state, sc, disc, case.equation)
        if log_projected:
            E.append(state.report.e_total)
            Ep.append(state.report.e_projected)
    bad = 0
    if log_projected and len(E) >= 3:
        mg = projection_condition_margin(E, Ep)
        bad = len(monotone_violations(Ep, window_mask=np.nan_to_num(mg, nan=-1.0) >= 0))
    return state, bad


def run_mms(equation, scheme="bdf1", method=2, mode="temporal", levels=4, degree=None, n=None,
            dts=None, t_end=None, reference="fine", solver=None, log_projected=False):
    """Convergence study for the manufactured solutions.

    Temporal mode refines dt by 2 on a fixed mesh and measures the error
    against a reference solution on the same mesh, computed with a
    second-order scheme at ``dt_min / 8`` (``reference="fine"``), which
    removes the spatial error; errors against the exact solution are
    reported alongside. Spatial mode refines the mesh ``8 * 2^k`` with
    ``dt = 1e-6`` up to ``T = 1e-3``.
    """
    case = mms_case(equation)
    if mode == "temporal":
        setup = TEMPORAL_SETUP[equation]
        n = setup["n"] if n is None else n
        degree = setup["degree"] if degree is None else degree
        dts = list(TEMPORAL_DTS[:levels]) if dts is None else list(dts)
        t_end = 1.0 if t_end is None else t_end
        solver = "auto" if solver is None else solver
        mesh = build_rect_mesh(case.domain, n, n)
        space = FeSpace(mesh, degree)
        disc = Discretization(space, case.potential, case.eq_coeffs)
        finals = []
        bad = 0
        for dt in dts:
            st, b = _mms_run(case, space, disc, scheme, method, dt, t_end, solver, log_projected)
            finals.append(st)
            bad += b
        exact = [l2_error(space, s.u, case.exact_u, s.time) for s in finals]
        if reference == "fine":
            ref_scheme = "cn" if scheme == "cn" else "bdf2"
            ref, _ = _mms_run(case, space, disc, ref_scheme, method, dts[-1] / 8, t_end, solver)
            diff = [s.u - ref.u for s in finals]
            errors = [float(np.sqrt(d @ (disc.G @ d))) for d in diff]
        else:
            errors = exact
        return MmsTable(equation, scheme, method, mode, dts, errors, compute_rates(errors, 2.0),
                        exact, compute_rates(exact, 2.0), bad)
    if mode == "spatial":
        degree = 1 if degree is None else degree
        dt = 1e-6 if dts is None else dts[0]
        t_end = 1e-3 if t_end is None else t_end
        solver = ("recycled" if equation == "ch" else "auto") if solver is None else solver
        ns = [8 * 2**k for k in range(levels)] if n is None else list(n)
        errors = []
        bad = 0
        for nn in ns:
            space = FeSpace(build_rect_mesh(case.domain, nn, nn), degree)
            disc = Discretization(space, case.potential, case.eq_coeffs)
            st, b = _mms_run(case, space, disc, scheme, method, dt, t_end, solver, log_projected)
            bad += b
            errors.append(l2_error(space, st.u, case.exact_u, st.time))
        rates = compute_rates(errors, 2.0)
        return MmsTable(equation, scheme, method, mode, ns, errors, rates, errors, rates, bad)
    raise ValueError(f"unknown mode {mode!r}")


# benchmark -------------------------------------------------------------------

@dataclass
class BenchRow:
    method: int
    wall_s: float
    steps: int
    final_energy: float


def run_bench(cfg, methods=(1, 2, 3), n_steps=None, repeats=1):
    """Wall-clock time of each method on the same problem and step count.

    Output files are not written and the projected energy is not logged, so
    only the scheme itself is timed. With ``repeats > 1`` the methods are run
    in interleaved rounds and the minimum per method is kept, so slow drift of
    the machine load affects every method alike.
    """
    base = replace(cfg, output=replace(cfg.output, csv=None, vtk_prefix=None, manifest=None, log_projected=False))
    cfgs = {int(m): replace(base, time=replace(base.time, method=int(m))) for m in methods}
    best = {m: math.inf for m in cfgs}
    last = {}
    for _ in range(max(1, repeats)):
        for m, c in cfgs.items():
            res = run_simulation(c, problem=build_problem(c), n_steps=n_steps)
            best[m] = min(best[m], res.wall_s)
            last[m] = res
    return [BenchRow(m, best[m], last[m].state.step, last[m].rows[-1].energy) for m in cfgs]


def format_bench(rows):
    lines = [f"{'method':>6s} {'steps':>6s} {'wall [s]':>10s} {'final energy':>22s}"]
    for r in rows:
        lines.append(f"{r.method:>6d} {r.steps:>6d} {r.wall_s:10.3f} {r.final_energy:22.15e}")
    return "\n".join(lines)
