import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from heig.kernels import green_dirichlet, green_mixed
from heig.oracles import (
    ExampleId,
    linearized_profile,
    oracle_a_rho,
    oracle_F_low,
    oracle_F_up,
    oracle_sections,
    oracle_t_rho,
    oracle_threshold,
)

EX1, EX2 = ExampleId.EXAMPLE1_MIXED, ExampleId.EXAMPLE2_DIRICHLET
PI = math.pi
RHOS = (0.05, 0.1, 0.5, 1.0)


def _quad_sections(kern, t):
    f = lambda s: kern(t, s) * math.sin(1.5 * PI * s)
    pts = [t] if 0 < t < 1 else None
    plus = quad(f, 0, 2 / 3, points=pts if t < 2 / 3 else None, epsabs=1e-14, epsrel=1e-14)[0]
    minus = quad(f, 2 / 3, 1, points=pts if t > 2 / 3 else None, epsabs=1e-14, epsrel=1e-14)[0]
    return plus, minus


@pytest.mark.parametrize("ex, kern", [(EX1, green_mixed), (EX2, green_dirichlet)])
def test_sections_match_scipy_quad(ex, kern):
    for t in np.linspace(0, 1, 31):
        want = _quad_sections(kern, float(t))
        got = oracle_sections(ex, t)
        assert got == pytest.approx(want, abs=1e-13)


@pytest.mark.parametrize("rho", RHOS)
def test_zero_at_origin(rho):
    assert oracle_F_low(EX1, rho, 0.0) == 0.0
    assert oracle_F_up(EX1, rho, 0.0) == 0.0
    assert oracle_F_low(EX2, rho, 0.0) == 0.0
    assert oracle_F_low(EX2, rho, 1.0) == pytest.approx(0.0, abs=1e-16)
    assert oracle_F_up(EX2, rho, 1.0) == pytest.approx(0.0, abs=1e-16)


@pytest.mark.parametrize("rho", RHOS)
def test_value_at_two_thirds(rho):
    e_m, e_p = math.exp(-2 * rho), math.exp(2 * rho)
    assert oracle_F_low(EX1, rho, 2 / 3) == pytest.approx(4 / (9 * PI) * (e_m - e_p), abs=1e-15)
    want = 4 / (27 * PI) * e_m + (8 - 4 * PI) / (27 * PI ** 2) * e_p
    assert oracle_F_low(EX2, rho, 2 / 3) == pytest.approx(want, abs=1e-15)


@pytest.mark.parametrize("ex", [EX1, EX2])
@pytest.mark.parametrize("rho", RHOS)
def test_branch_continuity(ex, rho):
    a, b = np.nextafter(2 / 3, 0), np.nextafter(2 / 3, 1)
    for F in (oracle_F_low, oracle_F_up):
        assert abs(F(ex, rho, a) - F(ex, rho, b)) < 1e-12


def test_zero_rho_envelopes_coincide():
    t = np.linspace(0, 1, 101)
    assert np.array_equal(oracle_F_low(EX1, 0.0, t), oracle_F_up(EX1, 0.0, t))


def test_thresholds():
    assert oracle_threshold(EX1) == pytest.approx(0.1732868, abs=1e-7)
    assert oracle_threshold(EX2, "interval_tail") == pytest.approx(0.2530764, abs=1e-7)
    assert oracle_threshold(EX2, "global") == pytest.approx(0.5996500, abs=1e-7)
    with pytest.raises(ValueError):
        oracle_threshold(EX1, "interval_tail")
    with pytest.raises(ValueError):
        oracle_threshold(EX2, "middle")


def test_t_rho_values():
    assert oracle_t_rho(EX1, 1e-12) == pytest.approx(1 / 3, abs=1e-10)
    assert oracle_t_rho(EX1, 0.2) == 0.0
    assert oracle_t_rho(EX1, 0.1) == pytest.approx(0.2243, abs=1e-4)
    # small-rho limit for the Dirichlet case maximizes sin(3 pi t / 2) + t
    limit = minimize_scalar(lambda t: -(math.sin(1.5 * PI * t) + t), bounds=(0, 1),
                            method="bounded", options={"xatol": 1e-12}).x
    assert oracle_t_rho(EX2, 1e-12) == pytest.approx(limit, abs=1e-7)
    assert limit == pytest.approx(0.3787, abs=1e-4)
    with pytest.raises(ValueError):
        oracle_t_rho(EX1, 0.0)


@pytest.mark.parametrize("rho", [0.01, 0.05, 0.1, 0.15, 0.17])
def test_maximizer_property(rho):
    t = np.linspace(0, 1, 1001)
    peak = oracle_F_low(EX1, rho, oracle_t_rho(EX1, rho))
    assert np.all(oracle_F_low(EX1, rho, t) <= peak + 1e-15)


@pytest.mark.parametrize("rho", [0.02, 0.08, 0.16])
def test_derivative_sign(rho):
    tr = oracle_t_rho(EX1, rho)
    h = 1e-7
    left = np.linspace(0.01, tr - 0.01, 50)
    right = np.linspace(tr + 0.01, 2 / 3 - 0.01, 50)
    d = lambda t: (oracle_F_low(EX1, rho, t + h) - oracle_F_low(EX1, rho, t - h)) / (2 * h)
    assert np.all(d(left) > 0) and np.all(d(right) < 0)


def test_a_rho_band():
    assert oracle_a_rho(EX1, 0.1) > 0
    assert oracle_a_rho(EX1, 0.25) is None


@pytest.mark.parametrize("ex", [EX1, EX2])
def test_linearized_profile_matches_zero_rho_sections(ex):
    t = np.linspace(0, 1, 301)
    plus, minus = oracle_sections(ex, t)
    assert np.allclose(linearized_profile(ex, t), plus + minus, atol=1e-15)


def test_domain_error():
    with pytest.raises(ValueError):
        oracle_F_low(EX1, 0.1, 1.5)
    with pytest.raises(ValueError):
        ExampleId.parse("example3")
