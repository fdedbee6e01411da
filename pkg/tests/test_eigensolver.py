import dataclasses
import math

import numpy as np
import pytest
from scipy.integrate import quad

from heig import (
    DegenerateOperatorError,
    NoConvergenceError,
    NonFiniteError,
    ProblemSpec,
    apply_T,
    build_bounds,
    check_conditions,
    discretize,
    linear_problem,
    register_kernel,
    solve_pair,
    sup_norm,
    sweep_rho,
    unregister_kernel,
    verify_pair,
)
from heig.eigensolver import newton_cotes_weights
from heig.kernels import GREEN_MIXED
from heig.oracles import linearized_profile
from heig.problems import exp_ratio_envelopes, sine_weight

PI = math.pi
MU_MIXED = 9 * PI ** 2 / 4


@pytest.mark.parametrize("cells", [1, 2, 3, 4, 5, 7, 10])
def test_newton_cotes_weights(cells):
    w = newton_cotes_weights(cells) / cells  # unit spacing -> [0, 1]
    x = np.linspace(0, 1, cells + 1)
    top = 1 if cells == 1 else 3
    for deg in range(top + 1):
        assert np.dot(w, x ** deg) == pytest.approx(1 / (deg + 1), abs=1e-14)


def test_discretize_invariants(op1):
    assert op1.n == 256
    assert op1.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert op1.kernel_matrix.min() >= 0 and op1.matrix.min() >= 0
    assert 2 / 3 in op1.nodes
    assert not op1.nodes.flags.writeable
    with pytest.raises(ValueError):
        discretize(op1.spec, 7)


def test_constant_kernel_rows_sum_to_one():
    kern = register_kernel("test_unit_kernel", lambda t, s: np.ones(np.broadcast_shapes(np.shape(t), np.shape(s))))
    try:
        spec = linear_problem(kern, g=lambda t: np.ones_like(np.asarray(t, float)), change_points=())
        op = discretize(spec, 33)
        assert np.allclose(apply_T(op, np.random.default_rng(1).normal(size=33)), 1.0, atol=1e-14)
    finally:
        unregister_kernel("test_unit_kernel")


@pytest.mark.parametrize("ex", ["example1_mixed", "example2_dirichlet"])
def test_zero_input_gives_profile_and_converges(ex):
    from heig import example_problem

    errs = []
    for n in (64, 128):
        op = discretize(example_problem(ex), n)
        errs.append(np.abs(apply_T(op, np.zeros(n)) - linearized_profile(ex, op.nodes)).max())
    assert errs[1] < 1e-8
    assert errs[0] >= 4 * errs[1]


def test_zero_nonlinearity():
    spec = linear_problem(GREEN_MIXED, g=lambda t: np.zeros_like(np.asarray(t, float)), change_points=())
    op = discretize(spec, 16)
    assert np.all(apply_T(op, np.ones(16)) == 0)
    with pytest.raises(DegenerateOperatorError):
        solve_pair(op, 0.1)


def test_nonfinite_detected(op1):
    with pytest.raises(NonFiniteError):
        with np.errstate(over="ignore", invalid="ignore"):
            apply_T(op1, np.full(op1.n, 1e4))


def test_wrong_length(op1):
    with pytest.raises(ValueError):
        apply_T(op1, np.zeros(5))


def test_sandwich_small(ex1, op1, rng):
    rho = 0.1
    pair = build_bounds(ex1, rho)
    lo, up = pair.F_low(op1.nodes), pair.F_up(op1.nodes)
    for _ in range(20):
        u = rng.uniform(-rho, rho, op1.n)
        tu = apply_T(op1, u)
        assert np.all(lo - 1e-8 <= tu) and np.all(tu <= up + 1e-8)


def test_sup_norm_refines_node_max(op1):
    f = np.sin(1.5 * PI * np.asarray(op1.nodes))
    assert sup_norm(op1, f) == pytest.approx(1.0, abs=1e-9)
    assert sup_norm(op1, -3 * f) == pytest.approx(3.0, abs=1e-8)


def test_linear_problem_exact():
    op = discretize(linear_problem(GREEN_MIXED), 256)
    rho = 0.01
    pair = solve_pair(op, rho, +1)
    assert pair.lam == pytest.approx(rho * MU_MIXED, rel=1e-7)
    assert np.allclose(pair.u, rho * linearized_profile("example1_mixed", op.nodes) * MU_MIXED, atol=1e-9)
    check = verify_pair(pair, op)
    assert check.residual_refined < 1e-10 and check.passed


def _first_order(rho, sign):
    """Independent small-rho expansion of lam / (rho * 9 pi^2 / 4) for the mixed example.

    |Phi| peaks twice (t = 1/3 and t = 1), so the first correction is
    max over both peaks of the perturbation psi = K[g (v0 - mean v0)].
    """
    vbar = 2 / (3 * PI)

    def psi(t):
        f = lambda s: min(t, s) * math.sin(1.5 * PI * s) * (math.sin(1.5 * PI * s) - vbar)
        return quad(f, 0, 1, points=[t] if 0 < t < 1 else None, epsabs=1e-14, limit=200)[0]

    c = 4 / (9 * PI ** 2)
    a, b = psi(1 / 3), psi(1.0)
    coeff = max(a, -b) / c if sign > 0 else max(-a, b) / c
    return 1 - coeff * rho


@pytest.mark.parametrize("sign", [1, -1])
def test_small_rho_matches_first_order_expansion(op1, sign):
    rho = 0.01
    pair = solve_pair(op1, rho, sign)
    ratio = abs(pair.lam) / (rho * MU_MIXED)
    assert np.sign(pair.lam) == sign
    assert ratio == pytest.approx(_first_order(rho, sign), abs=1e-2)


@pytest.mark.parametrize("rho", [0.05, 0.15])
def test_both_branches_and_containment(ex1, op1, rho):
    rep = check_conditions(build_bounds(ex1, rho))
    for sign in (1, -1):
        pair = solve_pair(op1, rho, sign, tol=1e-9)
        assert pair.residual <= 1e-9 and pair.norm_defect <= 1e-9
        assert np.sign(pair.lam) == sign
        assert abs(pair.lam) <= rep.a_rho + 1e-8
        assert sup_norm(op1, pair.u) == pytest.approx(rho, abs=1e-9)


def test_sign_aliases(op1):
    a = solve_pair(op1, 0.05, "+")
    b = solve_pair(op1, 0.05, "minus")
    assert a.lam > 0 > b.lam
    with pytest.raises(ValueError):
        solve_pair(op1, 0.05, 0)


def test_newton_fallback(op2):
    pair = solve_pair(op2, 0.2, 1, max_iter=0)
    assert pair.method == "projective+newton"
    ref = solve_pair(op2, 0.2, 1)
    assert pair.lam == pytest.approx(ref.lam, abs=1e-8)
    assert pair.residual <= 1e-9


def test_warm_start(op1):
    first = solve_pair(op1, 0.10, 1)
    warm = solve_pair(op1, 0.11, 1, init=first.u)
    cold = solve_pair(op1, 0.11, 1)
    assert warm.lam == pytest.approx(cold.lam, abs=1e-8)


def test_no_convergence_carries_best(op1):
    with pytest.raises(NoConvergenceError) as info:
        solve_pair(op1, 0.05, 1, tol=1e-300)
    assert info.value.best is not None
    assert info.value.best.residual < 1e-8


def test_invalid_args(op1):
    with pytest.raises(ValueError):
        solve_pair(op1, 0.0)
    with pytest.raises(ValueError):
        solve_pair(op1, 0.1, tol=0)


def test_verify_detects_perturbed_lambda(ex1, op1):
    rep = check_conditions(build_bounds(ex1, 0.1))
    pair = solve_pair(op1, 0.1, 1)
    good = verify_pair(pair, op1, rep)
    assert good.passed and good.contained and good.margin > 0
    bad = dataclasses.replace(pair, lam=pair.lam * 1.5 * rep.a_rho / abs(pair.lam))
    check = verify_pair(bad, op1, rep)
    assert not check.passed and not check.contained and check.margin < 0


def test_sweep_rows(ex1):
    res = sweep_rho(ex1, [0.05, 0.1, 0.25], n=128)
    assert len(res) == 3
    assert res.rows[0].a_rho is not None and res.rows[0].plus is not None
    last = res.rows[2]
    assert not last.report.holds_5b
    for row in res.rows[:2]:
        assert abs(row.plus.lam) <= row.a_rho + 1e-8 and abs(row.minus.lam) <= row.a_rho + 1e-8


def test_sweep_threads_match_sequential(ex2):
    rhos = [0.1, 0.2, 0.3]
    seq = sweep_rho(ex2, rhos, n=64, continuation=False, workers=1)
    par = sweep_rho(ex2, rhos, n=64, continuation=False, workers=3)
    for a, b in zip(seq, par):
        assert a.plus.lam == b.plus.lam and a.minus.lam == b.minus.lam


def test_sweep_edge_cases(ex1):
    assert len(sweep_rho(ex1, [])) == 0
    with pytest.raises(ValueError):
        sweep_rho(ex1, [0.2, 0.1])
    rows = sweep_rho(ex1, [0.1], solve=False)
    assert rows.rows[0].plus is None and rows.rows[0].a_rho is not None


def test_bounds_only_problem_cannot_be_discretized():
    spec = ProblemSpec(kernel=GREEN_MIXED, g=sine_weight, ell_bounds=exp_ratio_envelopes)
    with pytest.raises(ValueError):
        discretize(spec, 16)
