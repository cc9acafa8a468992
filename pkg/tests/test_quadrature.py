import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coldlimits.errors import AccuracyError, InvalidInputError
from coldlimits.quadrature import integrate
from coldlimits.roots import bracket_root


def test_polynomial_exact():
    r = integrate(lambda x: (x**5 - 3 * x**2)[:, None], -1.0, 2.0)
    assert r.value[0] == pytest.approx((64 - 1) / 6 - (8 + 1), rel=1e-14)


def test_semi_infinite_gaussian_and_lorentzian():
    r = integrate(lambda x: np.stack([np.exp(-x**2), 1 / (1 + x**2)], axis=1), 0.0, np.inf, rtol=1e-11)
    np.testing.assert_allclose(r.value, [math.sqrt(math.pi) / 2, math.pi / 2], rtol=1e-10)


def test_narrow_resonance_with_break_point():
    g = 1e-5
    r = integrate(lambda x: (g / np.pi / ((x - 3.0) ** 2 + g**2))[:, None], 0.0, 10.0, points=[3.0], rtol=1e-10)
    exact = (math.atan(7 / g) + math.atan(3 / g)) / math.pi
    assert r.value[0] == pytest.approx(exact, rel=1e-9)


def test_matrix_valued_shape():
    r = integrate(lambda x: np.einsum("n,ij->nij", np.sin(x), np.eye(2)), 0.0, math.pi)
    assert r.value.shape == (2, 2)
    np.testing.assert_allclose(r.value, 2 * np.eye(2), rtol=1e-12)


def test_groups_resolve_small_component():
    # the tiny component has a sharp feature that a joint tolerance would ignore
    def f(x):
        return np.stack([np.ones_like(x), 1e-12 * np.exp(-((x - 0.3) / 1e-4) ** 2)], axis=1)
    joint = integrate(f, 0.0, 1.0, rtol=1e-8)
    each = integrate(f, 0.0, 1.0, rtol=1e-8, groups="each")
    exact = 1e-12 * 1e-4 * math.sqrt(math.pi)
    assert each.value[1] == pytest.approx(exact, rel=1e-7)
    assert each.n_intervals >= joint.n_intervals


def test_non_finite_integrand_raises():
    with np.errstate(divide="ignore"):
        with pytest.raises(AccuracyError):
            integrate(lambda x: (1 / (x - 0.5))[:, None], 0.0, 1.0)


def test_empty_interval():
    r = integrate(lambda x: np.ones((len(x), 3)), 1.0, 1.0)
    np.testing.assert_array_equal(r.value, 0.0)


def test_budget_exhaustion_raises():
    with pytest.raises(AccuracyError):
        integrate(lambda x: np.sin(1 / np.abs(x - 0.4))[:, None], 0.0, 1.0, rtol=1e-14, max_intervals=20)
    r = integrate(lambda x: np.sin(1 / np.abs(x - 0.4))[:, None], 0.0, 1.0, rtol=1e-14,
                  max_intervals=20, raise_on_failure=False)
    assert r.error > 0


@given(st.floats(-3, 3), st.floats(0.1, 4), st.floats(0.2, 5))
def test_gaussian_moments(mu, sigma, width):
    a, b = mu - width, mu + 2 * width
    r = integrate(lambda x: np.exp(-0.5 * ((x - mu) / sigma) ** 2)[:, None], a, b, rtol=1e-12)
    exact = sigma * math.sqrt(math.pi / 2) * (math.erf(2 * width / sigma / math.sqrt(2))
                                              + math.erf(width / sigma / math.sqrt(2)))
    assert r.value[0] == pytest.approx(exact, rel=1e-10)


def test_bracket_root_basic():
    assert bracket_root(lambda x: x**3 - 2, 0.0, 3.0, rtol=1e-14) == pytest.approx(2 ** (1 / 3), rel=1e-13)
    assert bracket_root(lambda x: math.cos(x) - x, 0.0, 1.0) == pytest.approx(0.7390851332, rel=1e-9)
    assert bracket_root(lambda x: x, 0.0, 1.0) == 0.0


def test_bracket_root_requires_sign_change():
    with pytest.raises(InvalidInputError):
        bracket_root(lambda x: x**2 + 1, -1.0, 1.0)


def test_bracket_root_budget():
    with pytest.raises(AccuracyError):
        bracket_root(lambda x: math.atan(x - 0.3), -1e6, 1e6, rtol=1e-15, maxiter=3)


@given(st.floats(0.01, 100), st.floats(1.5, 7))
def test_bracket_root_power(c, p):
    x = bracket_root(lambda x: x**p - c, 0.0, max(2.0, c), rtol=1e-12)
    assert x == pytest.approx(c ** (1 / p), rel=1e-10)
