import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heig.kernels import GREEN_DIRICHLET, GREEN_MIXED
from heig.quadrature import (
    QuadratureConfig,
    QuadratureError,
    gauss_kronrod_15,
    integrate,
    integrate_with_error,
    kernel_apply,
)


def test_rule_weights_and_embedded_gauss():
    x, wk, wg = gauss_kronrod_15()
    assert wk.sum() == pytest.approx(2.0, abs=1e-15)
    gx, gw = np.polynomial.legendre.leggauss(7)
    used = wg != 0
    assert np.allclose(np.sort(x[used]), np.sort(gx), atol=1e-15)
    assert np.allclose(wg[used][np.argsort(x[used])], gw[np.argsort(gx)], atol=1e-15)


@pytest.mark.parametrize("deg", range(0, 23))
def test_kronrod_exact_up_to_degree_22(deg):
    x, wk, _ = gauss_kronrod_15()
    exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
    assert float(np.dot(wk, x ** deg)) == pytest.approx(exact, abs=1e-14)


def test_smooth_integrals():
    assert integrate(np.sin, 0, math.pi) == pytest.approx(2.0, abs=1e-12)
    assert integrate(np.exp, -1, 2) == pytest.approx(math.e ** 2 - 1 / math.e, abs=1e-12)
    val, err = integrate_with_error(lambda x: np.sqrt(x), 0, 1)
    assert val == pytest.approx(2 / 3, abs=1e-10) and err <= 1e-10


def test_breakpoints_for_kinks():
    f = lambda x: np.abs(x - 1 / 3)
    exact = (1 / 3) ** 2 / 2 + (2 / 3) ** 2 / 2
    assert integrate(f, 0, 1, breakpoints=[1 / 3]) == pytest.approx(exact, abs=1e-14)
    assert integrate(f, 0, 1) == pytest.approx(exact, abs=1e-10)


def test_reversed_and_empty_interval():
    with pytest.raises(ValueError):
        integrate(np.cos, 1, 0)
    assert integrate(np.cos, 0.3, 0.3) == 0.0


def test_subdivision_limit_raises():
    cfg = QuadratureConfig(abs_tol=1e-14, max_subdivisions=2)
    with pytest.raises(QuadratureError) as info:
        integrate(lambda x: np.sin(50 * x), 0, 1, cfg=cfg)
    assert info.value.estimate is not None


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(abs_tol=0)
    with pytest.raises(ValueError):
        QuadratureConfig(max_subdivisions=0)
    with pytest.raises(ValueError):
        QuadratureConfig(base_rule_order=21)


def test_deterministic():
    f = lambda x: np.exp(np.sin(7 * x))
    assert integrate(f, 0, 1) == integrate(f, 0, 1)


def test_kernel_apply_against_closed_forms():
    # int_0^1 min(t, s) ds = t - t^2/2; int_0^1 G_dir(t, s) ds = t(1-t)/2
    one = lambda s: np.ones_like(s)
    for t in (0.0, 0.25, 0.6, 1.0):
        assert kernel_apply(GREEN_MIXED, one, t) == pytest.approx(t - t * t / 2, abs=1e-14)
        assert kernel_apply(GREEN_DIRICHLET, one, t) == pytest.approx(t * (1 - t) / 2, abs=1e-14)


coef = st.floats(-5, 5, allow_nan=False)
point = st.floats(0, 1, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(a=coef, b=coef, c=st.floats(-3, 3))
def test_linearity(a, b, c):
    f = lambda x: np.cos(c * x)
    g = lambda x: x ** 3
    lhs = integrate(lambda x: a * f(x) + b * g(x), 0, 1)
    rhs = a * integrate(f, 0, 1) + b * integrate(g, 0, 1)
    assert lhs == pytest.approx(rhs, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(m=point, w=st.floats(0.5, 20))
def test_interval_splitting(m, w):
    f = lambda x: np.sin(w * x) * np.exp(-x)
    whole = integrate(f, 0, 1)
    parts = integrate(f, 0, m) + integrate(f, m, 1)
    assert whole == pytest.approx(parts, abs=3e-10)
