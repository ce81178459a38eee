import math

import numpy as np
import pytest

from arterial_network.characteristics import (
    EigenData,
    check_boundary_sign,
    cfl_check,
    eigen,
    from_riemann,
    normal_rhs,
    riemann_state,
    to_riemann,
)
from arterial_network.errors import HyperbolicityLoss
from arterial_network.models import AreaLaw, BloodFlowModel, Coefficients, LinearConstantModel, LinearTaper


def test_eigen_scalar():
    e = eigen(Coefficients(a=2.0, b=2.0, c=1.0, f=0.0, g=0.0))
    u = math.sqrt(5.0)
    assert e.u == pytest.approx(u)
    assert e.lambda_l == pytest.approx(1.0 - u)
    assert e.lambda_r == pytest.approx(1.0 + u)
    assert e.speed_bound == pytest.approx(1.0 + u)


def test_eigen_reports_first_bad_node():
    co = Coefficients(a=np.ones(4), b=np.array([1.0, 1.0, -1.0, -2.0]), c=np.zeros(4), f=np.zeros(4), g=np.zeros(4))
    with pytest.raises(HyperbolicityLoss) as info:
        eigen(co)
    assert info.value.n == 2
    assert info.value.value == pytest.approx(-1.0)
    assert info.value.event == "hyperbolicity_loss"


def test_eigen_rejects_degenerate_discriminant():
    with pytest.raises(HyperbolicityLoss):
        eigen(Coefficients(a=1.0, b=0.0, c=0.0, f=0.0, g=0.0))


def test_riemann_round_trip_on_random_states():
    rng = np.random.default_rng(11)
    for _ in range(20):
        a, b = rng.uniform(0.2, 3.0, size=2)
        c = rng.uniform(-0.5, 0.5)
        co = Coefficients(a=a, b=b, c=c, f=0.0, g=0.0)
        e = eigen(co)
        p, q = rng.normal(size=2)
        back = from_riemann(to_riemann(p, q, co, e), co, e)
        assert back[0] == pytest.approx(p, abs=1e-12)
        assert back[1] == pytest.approx(q, abs=1e-12)


def test_normal_rhs():
    co = Coefficients(a=2.0, b=0.5, c=0.0, f=1.0, g=3.0)
    e = eigen(co)
    d_r, d_l = normal_rhs(co, e)
    assert d_r == pytest.approx(-e.lambda_l * 1.0 + 2.0 * 3.0)
    assert d_l == pytest.approx(-e.lambda_r * 1.0 + 2.0 * 3.0)


def test_boundary_sign_condition():
    assert check_boundary_sign(EigenData(-1.0, 1.0, 1.0))
    bad = check_boundary_sign(eigen(Coefficients(a=1.0, b=-1.0, c=2.0, f=0.0, g=0.0)))
    assert not bad
    assert "lambda_L" in bad.detail
    assert bad.value > 0


def test_cfl_is_strict():
    assert not cfl_check(1.0, 1.0)
    assert not cfl_check(0.5, 2.0)
    assert cfl_check(0.99, 1.0)
    assert cfl_check(0.99, 1.0).value == pytest.approx(0.99)


def test_riemann_state_of_a_grid():
    model = LinearConstantModel(a=1.0, b=1.0)
    x = np.linspace(0.0, 1.0, 5)
    rp = riemann_state(model, x, 0.0, np.sin(x), np.zeros(5))
    np.testing.assert_allclose(rp.r, np.sin(x))
    np.testing.assert_allclose(rp.s, -np.sin(x))


def test_eigen_with_vanishing_b():
    e = eigen(Coefficients(a=1.0, b=0.0, c=1.0, f=0.0, g=0.0))
    assert (e.lambda_l, e.lambda_r, e.u) == (0.0, 2.0, 1.0)
    assert not check_boundary_sign(e)


def _random_coefficients(rng, size):
    a, b, c = rng.uniform(-3.0, 3.0, size=(3, size))
    hyperbolic = c * c + a * b > 1e-6
    return a[hyperbolic], b[hyperbolic], c[hyperbolic]


def test_speeds_are_ordered_and_satisfy_vieta():
    rng = np.random.default_rng(3)
    a, b, c = _random_coefficients(rng, 5000)
    zeros = np.zeros_like(a)
    e = eigen(Coefficients(a=a, b=b, c=c, f=zeros, g=zeros))
    assert np.all(e.lambda_l < e.lambda_r)
    scale = c * c + np.abs(a * b) + 1.0
    assert np.max(np.abs(e.lambda_l * e.lambda_r + a * b) / scale) < 1e-12


def test_boundary_sign_holds_exactly_when_ab_is_positive():
    rng = np.random.default_rng(5)
    a, b, c = _random_coefficients(rng, 2000)
    for ai, bi, ci in zip(a, b, c):
        e = eigen(Coefficients(a=ai, b=bi, c=ci, f=0.0, g=0.0))
        assert bool(check_boundary_sign(e)) == (ai * bi > 0)


def test_blood_flow_stays_hyperbolic_for_admissible_states():
    model = BloodFlowModel(rho=1.3, mu=0.02, area=AreaLaw(LinearTaper(alpha=1.0, gamma=-0.2), beta=0.5, p0=1.0))
    rng = np.random.default_rng(17)
    size = 100_000
    x = rng.uniform(0.0, 1.0, size)
    p = rng.uniform(0.5, 5.0, size)
    q = rng.uniform(-3.0, 3.0, size)
    co = model.eval(x, 0.0, p, q)
    e = eigen(co)
    area = model.area.area(x, p)
    # c^2 + ab reduces to A / (rho A_P)
    np.testing.assert_allclose(e.u**2, area * p / (model.rho * model.area.beta), rtol=1e-10)
    scale = co.c**2 + np.abs(co.a * co.b) + 1.0
    assert np.max(np.abs(e.lambda_l * e.lambda_r + co.a * co.b) / scale) < 1e-12
