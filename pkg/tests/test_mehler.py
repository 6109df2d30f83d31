import math

import numpy as np
import pytest

from quadprop.characteristic import solve_characteristic
from quadprop.errors import CausticError, SpecError
from quadprop.hamiltonian import AxisCoefficients, CoefficientFn, HamiltonianSpec, preset
from quadprop.mehler import phase_coefficients, phases_at, residual_check, riccati_oracle


def _phase(spec, t, axis=0):
    sol = solve_characteristic(spec, axis, t)
    return phase_coefficients(spec, sol, axis, t)


def _full_quadratic():
    ax = AxisCoefficients(b=CoefficientFn.constant(1.0), c=CoefficientFn.constant(-0.6),
                          f=CoefficientFn.constant(0.2), g=CoefficientFn.constant(0.3))
    return HamiltonianSpec(1, (ax,), name="full_quadratic")


def test_isotropic_quarter_period():
    p = _phase(preset("isotropic"), math.pi / 4)
    assert p.alpha == pytest.approx(0.5, abs=1e-12)
    assert p.gamma == pytest.approx(0.5, abs=1e-12)
    assert p.beta == pytest.approx(-math.sqrt(2), abs=1e-12)
    assert (p.delta, p.epsilon, p.kappa) == pytest.approx((0, 0, 0), abs=1e-14)


def test_free_particle_values():
    p = _phase(preset("free"), 2.0)
    assert p.as_tuple() == pytest.approx((0.25, -0.5, 0.25, 0.0, 0.0, 0.0), abs=1e-13)


@pytest.mark.parametrize("E, t", [(1.0, 1.3), (-0.7, 2.0)])
def test_constant_field_linear_terms(E, t):
    p = _phase(preset("constant_field", E=E), t)
    assert p.delta == pytest.approx(E * t / 2, abs=1e-12)
    assert p.epsilon == pytest.approx(E * t / 2, abs=1e-12)
    assert p.kappa == pytest.approx(-E ** 2 * t ** 3 / 24, abs=1e-12)


def test_riccati_matches_isotropic():
    spec = preset("isotropic")
    a = np.array(_phase(spec, 1.0).as_tuple())
    b = np.array(riccati_oracle(spec, 0, 1e-3, 1.0).as_tuple())
    np.testing.assert_allclose(a, b, atol=1e-6)


def test_riccati_free_alpha():
    assert riccati_oracle(preset("free"), 0, 1e-3, 2.0).alpha == pytest.approx(0.25, abs=1e-8)


def test_riccati_damped_and_log_derivative_identity():
    spec = preset("damped", lam=0.6)
    p = _phase(spec, 0.9)
    r = riccati_oracle(spec, 0, 1e-3, 0.9)
    np.testing.assert_allclose(p.as_tuple(), r.as_tuple(), atol=1e-6)
    c = -0.6
    assert abs(r.alpha + c / 2 - p.mu_prime / (2 * p.mu)) < 1e-8


@pytest.mark.parametrize("t", [0.5, 2.5, 3.5])
def test_full_quadratic_against_riccati(t):
    # 2.5 and 3.5 lie past the turning point of mu (t = 1.96)
    spec = _full_quadratic()
    a = np.array(_phase(spec, t).as_tuple())
    b = np.array(riccati_oracle(spec, 0, 1e-3, t).as_tuple())
    np.testing.assert_allclose(a, b, atol=1e-7)


def test_time_dependent_forcing_against_riccati():
    spec = preset("forced_parametric", omega2=CoefficientFn.sinusoidal(0.5, 2.0, math.pi / 2, 1.0),
                  force=CoefficientFn.sinusoidal(0.3, 1.0))
    for t in (0.7, 1.4, 2.2):
        a = np.array(_phase(spec, t).as_tuple())
        b = np.array(riccati_oracle(spec, 0, 1e-3, t).as_tuple())
        np.testing.assert_allclose(a, b, atol=1e-7)


def test_caustic_rejected():
    spec = preset("isotropic")
    sol = solve_characteristic(spec, 0, 4.0)
    with pytest.raises(CausticError) as info:
        phase_coefficients(spec, sol, 0, math.pi)
    assert info.value.time == pytest.approx(math.pi)


def test_small_time_is_not_a_caustic():
    p = _phase(preset("isotropic"), 1e-6)
    assert p.maslov == 0
    assert p.beta == pytest.approx(-1e6, rel=1e-9)


def test_maslov_counts_caustics():
    spec = preset("isotropic")
    sol = solve_characteristic(spec, 0, 7.0)
    assert [phase_coefficients(spec, sol, 0, t).maslov for t in (1.0, 4.0, 7.0)] == [0, 1, 2]


def test_past_caustic_matches_closed_form_coefficients():
    t = 4.0
    p = _phase(preset("isotropic"), t)
    assert p.alpha == pytest.approx(math.cos(t) / (2 * math.sin(t)), abs=1e-10)
    assert p.beta == pytest.approx(-1 / math.sin(t), abs=1e-10)


def test_phases_at_multi_axis():
    ph = phases_at(preset("hybrid", omega1=1.0, omega2=1.0), 0.8)
    assert len(ph) == 2
    assert ph[0].beta == pytest.approx(-1 / math.sinh(0.8), abs=1e-12)
    assert ph[1].beta == pytest.approx(-1 / math.sin(0.8), abs=1e-12)


def test_riccati_refuses_bad_start_and_caustics():
    spec = preset("isotropic")
    with pytest.raises(SpecError):
        riccati_oracle(spec, 0, 0.5, 1.0)
    with pytest.raises(CausticError):
        riccati_oracle(spec, 0, 1e-3, 4.0)


def _samples(spec, t0, t1, dt):
    sol = solve_characteristic(spec, 0, t1)
    return [phase_coefficients(spec, sol, 0, t) for t in np.arange(t0, t1 + dt / 2, dt)]


def test_residual_isotropic():
    assert residual_check(preset("isotropic"), _samples(preset("isotropic"), 0.1, 1.0, 1e-3)) < 1e-5


def test_residual_anisotropic():
    spec = preset("anisotropic", omega=2.0)
    assert residual_check(spec, _samples(spec, 0.1, 1.0, 1e-3)) < 1e-5


def test_residual_free():
    # alpha = 1/(2t) is not polynomial; away from t = 0 the stencil error is below round-off
    spec = preset("free")
    assert residual_check(spec, _samples(spec, 2.0, 4.0, 1e-3)) < 1e-12


def test_residual_flags_wrong_coefficients():
    spec = preset("isotropic")
    ph = _samples(spec, 0.5, 1.0, 1e-2)
    assert residual_check(preset("anisotropic", omega=2.0), ph) > 0.1
