import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ieqfem.errors import ConfigError, PotentialDomainError
from ieqfem.potential import (
    DoubleWell, EquationCoeffs, FloryHuggins, f_eval, f_prime, h_eval, init_aux, make_potential,
)


def test_double_well_values():
    p = DoubleWell(1.0)
    assert f_eval(p, 0.0) == 0.25
    assert f_prime(p, 0.0) == 0.0
    assert h_eval(p, 0.0) == 0.0


@pytest.mark.parametrize("B", [1e-3, 1.0, 100.0])
@pytest.mark.parametrize("u", [-1.0, 1.0])
def test_double_well_wells(u, B):
    p = DoubleWell(B)
    assert f_eval(p, u) == 0 and f_prime(p, u) == 0 and h_eval(p, u) == 0


def test_double_well_needs_positive_B():
    with pytest.raises(ConfigError, match="problem.B"):
        DoubleWell(0.0)


def fh_reference(u):
    # the mixing potential written out independently with math.log
    return 600 * (u * math.log(u) + (1 - u) * math.log(1 - u)) + 1800 * u * (1 - u)


def test_flory_huggins_symmetric_point():
    # theta/2 = 600 and theta_c/2 = 1800 in the parametrisation used here
    p = FloryHuggins(1200.0, 3600.0, B=100.0)
    assert abs(float(f_prime(p, 0.5))) < 1e-10
    assert float(f_eval(p, 0.5)) == pytest.approx(fh_reference(0.5), rel=1e-14)
    assert float(f_eval(p, 0.5)) == pytest.approx(450 - 600 * math.log(2), rel=1e-14)


@given(u=st.floats(0.01, 0.99))
def test_flory_huggins_derivative(u):
    p = FloryHuggins(1200.0, 3600.0, B=1000.0)
    h = 1e-6
    fd = (fh_reference(u + h) - fh_reference(u - h)) / (2 * h)
    assert float(f_prime(p, u)) == pytest.approx(fd, rel=1e-6, abs=1e-4)


def test_flory_huggins_clamps():
    p = FloryHuggins(1200.0, 3600.0, B=100.0, clamp_delta=1e-8)
    assert np.isfinite(f_eval(p, 0.0)) and np.isfinite(f_prime(p, 1.0))
    assert float(f_eval(p, -3.0)) == float(f_eval(p, 1e-8))


@pytest.mark.parametrize("kw", [dict(clamp_delta=0.0), dict(clamp_delta=0.6), dict(B=-1.0), dict(B=0.0)])
def test_flory_huggins_validation(kw):
    # theta_c > theta makes F negative somewhere, so B = 0 is rejected as well
    with pytest.raises(ConfigError):
        FloryHuggins(1200.0, 3600.0, **kw)


def test_init_aux_values():
    assert init_aux(DoubleWell(4.0), np.ones(5)) == pytest.approx(2.0)
    np.testing.assert_allclose(init_aux(DoubleWell(1.0), np.zeros(3)), math.sqrt(1.25), rtol=1e-15)
    p = FloryHuggins(1200.0, 3600.0, B=100.0)
    U = init_aux(p, np.full((2, 3), 0.5))
    assert np.ptp(U) == 0
    assert U[0, 0] == pytest.approx(math.sqrt(fh_reference(0.5) + 100.0), rel=1e-14)


def test_domain_error_names_u_and_B():
    class Neg:
        B = 0.5

        def F(self, u):
            return -np.ones_like(np.asarray(u, dtype=float))

    with pytest.raises(PotentialDomainError, match=r"u = 0\.3.*B = 0\.5"):
        init_aux(Neg(), np.array([0.3, 0.4]))


@given(u=st.floats(-3, 3), B=st.floats(0.01, 10))
def test_quadratization_identity(u, B):
    p = DoubleWell(B)
    assert float(h_eval(p, u) * init_aux(p, u)) == pytest.approx(float(f_prime(p, u)), rel=1e-12, abs=1e-14)


def test_make_potential():
    assert isinstance(make_potential("double-well", B=2.0), DoubleWell)
    assert isinstance(make_potential("flory_huggins", B=100, theta=1200, theta_c=3600), FloryHuggins)
    with pytest.raises(ConfigError, match="problem.theta"):
        make_potential("flory_huggins", B=1.0)
    with pytest.raises(ConfigError, match="problem.potential"):
        make_potential("quartic")


@pytest.mark.parametrize("eq,form,expect", [
    ("ch", "standard", (0.01, 1.0)), ("ch", "rescaled", (0.1, 10.0)),
    ("ac", "standard", (0.01, 1.0)), ("ac", "rescaled", (1.0, 100.0)),
])
def test_equation_coeffs(eq, form, expect):
    c = EquationCoeffs.make(eq, form, 0.1)
    assert (c.c_grad, c.c_pot) == pytest.approx(expect)


def test_mobility():
    c = EquationCoeffs(1.0, 1.0, lambda u: 1 - u * u)
    assert not c.constant_mobility
    np.testing.assert_allclose(c.mobility_at(np.array([0.0, 0.5])), [1.0, 0.75])
    with pytest.raises(PotentialDomainError):
        c.mobility_at(np.array([2.0]))
    with pytest.raises(ConfigError, match="problem.mobility"):
        EquationCoeffs(1.0, 1.0, -1.0)
