"""Cahn-Hilliard steppers.

``u_t = div(M grad w)``, ``w = -c_grad lap u + c_pot H(u) U`` with
homogeneous Neumann conditions; BDF1 and BDF2 in time, auxiliary variable
methods 1, 2 and 3.
"""

from __future__ import annotations

from dataclasses import dataclass

from .stepping import State, StepConfig, advance, initial_state


@dataclass(frozen=True)
class ChState(State):
    pass


ChStepConfig = StepConfig


def ch_initial_state(disc, u0, method, scheme="bdf1", u0_quad=None):
    return initial_state(disc, u0, method, scheme, u0_quad, cls=ChState)


def ch_step_bdf1(state, cfg, disc):
    """One BDF1 step. Method 1 solves the 3N block system, methods 2 and 3 the 2N one."""
    if cfg.scheme != "bdf1":
        raise ValueError(f"config scheme is {cfg.scheme!r}, expected 'bdf1'")
    return advance(state, cfg, disc, "ch")


def ch_step_bdf2(state, cfg, disc):
    """One BDF2 step with coefficients frozen at ``2 u^n - u^n-1``."""
    if cfg.scheme != "bdf2":
        raise ValueError(f"config scheme is {cfg.scheme!r}, expected 'bdf2'")
    return advance(state, cfg, disc, "ch")


def ch_step(state, cfg, disc):
    steppers = {"bdf1": ch_step_bdf1, "bdf2": ch_step_bdf2}
    if cfg.scheme not in steppers:
        raise ValueError(f"no Cahn-Hilliard stepper for scheme {cfg.scheme!r}")
    return steppers[cfg.scheme](state, cfg, disc)
