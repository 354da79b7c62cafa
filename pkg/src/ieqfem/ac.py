"""Allen-Cahn steppers.

``u_t = c_grad lap u - c_pot H(u) U`` with homogeneous Neumann conditions;
BDF1, Crank-Nicolson and BDF2 in time, auxiliary variable methods 1, 2, 3.
"""

from __future__ import annotations

from dataclasses import dataclass

from .stepping import State, StepConfig, advance, initial_state


@dataclass(frozen=True)
class AcState(State):
    pass


AcStepConfig = StepConfig


def ac_initial_state(disc, u0, method, scheme="bdf1", u0_quad=None):
    return initial_state(disc, u0, method, scheme, u0_quad, cls=AcState)


def _check(cfg, scheme):
    if cfg.scheme != scheme:
        raise ValueError(f"config scheme is {cfg.scheme!r}, expected {scheme!r}")


def ac_step_bdf1(state, cfg, disc):
    _check(cfg, "bdf1")
    return advance(state, cfg, disc, "ac")


def ac_step_cn(state, cfg, disc):
    """Midpoint step; coefficients frozen at ``1.5 u^n - 0.5 u^n-1``."""
    _check(cfg, "cn")
    return advance(state, cfg, disc, "ac")


def ac_step_bdf2(state, cfg, disc):
    _check(cfg, "bdf2")
    return advance(state, cfg, disc, "ac")


def ac_step(state, cfg, disc):
    return {"bdf1": ac_step_bdf1, "cn": ac_step_cn, "bdf2": ac_step_bdf2}[cfg.scheme](state, cfg, disc)
