"""Acceptance criteria, each at its stated tolerance.

Run alone with ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line
per criterion is printed in the terminal summary.
"""

import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from conftest import ACCEPTANCE_LINES
from heig import (
    ExampleId,
    apply_T,
    build_bounds,
    check_conditions,
    discretize,
    example_problem,
    interval_threshold_scan,
    solve_pair,
    sup_norm,
    threshold_scan,
)
from heig.oracles import (
    oracle_a_rho,
    oracle_F_low,
    oracle_F_up,
    oracle_t_rho,
    oracle_threshold,
)

EX1, EX2 = ExampleId.EXAMPLE1_MIXED, ExampleId.EXAMPLE2_DIRICHLET
PI = math.pi


def record(name, ok, detail):
    ACCEPTANCE_LINES.append((name, bool(ok), detail))
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, detail


def test_criterion_1_oracle_equivalence():
    t = np.linspace(0, 1, 1001)
    worst = 0.0
    for ex in (EX1, EX2):
        spec = example_problem(ex)
        for rho in (0.05, 0.1, 0.5, 1.0):
            pair = build_bounds(spec, rho)
            worst = max(worst,
                        np.abs(pair.F_low(t) - oracle_F_low(ex, rho, t)).max(),
                        np.abs(pair.F_up(t) - oracle_F_up(ex, rho, t)).max())
    record("1 oracle equivalence", worst <= 1e-8, f"max abs error {worst:.3e} (tol 1e-8)")


def test_criterion_2_thresholds():
    s1 = threshold_scan(example_problem(EX1), 0.005, 0.4)
    s2_tail = interval_threshold_scan(example_problem(EX2), 0.005, 0.4, (2 / 3, 1))
    s2 = threshold_scan(example_problem(EX2), 0.005, 0.8)
    e1 = abs(s1 - math.log(2) / 4)
    e2t = abs(s2_tail - math.log(PI / (PI - 2)) / 4)
    e2 = abs(s2 - math.log(4 * PI / (PI - 2)) / 4)
    ok = e1 <= 1e-6 and e2t <= 1e-4 and e2 <= 1e-4
    record("2 thresholds", ok,
           f"ex1 {s1:.8f} (err {e1:.1e}, tol 1e-6); ex2 tail {s2_tail:.8f} (err {e2t:.1e}); "
           f"ex2 global {s2:.8f} (err {e2:.1e}, tol 1e-4)")


def test_criterion_3_maximizer():
    worst = 0.0
    cases = {EX1: (0.02, 0.07, 0.12, 0.16), EX2: (0.05, 0.2, 0.4, 0.55)}
    for ex, rhos in cases.items():
        spec = example_problem(ex)
        for rho in rhos:
            rep = check_conditions(build_bounds(spec, rho))
            worst = max(worst, abs(rep.t_rho_5b - oracle_t_rho(ex, rho)))
    record("3 maximizer t_rho", worst <= 1e-6, f"max |t - oracle| {worst:.3e} (tol 1e-6)")


def test_criterion_4_localization_bands():
    worst = 0.0
    grids = {EX1: np.linspace(0.005, 0.17, 20), EX2: np.linspace(0.005, 0.59, 20)}
    for ex, rhos in grids.items():
        spec = example_problem(ex)
        for rho in rhos:
            rep = check_conditions(build_bounds(spec, rho))
            want = oracle_a_rho(ex, rho)
            worst = max(worst, abs(rep.a_rho_5b - want) / want)
    record("4 localization a(rho)", worst <= 1e-8, f"max relative error {worst:.3e} (tol 1e-8)")


def test_criterion_5_eigenpairs():
    cases = {EX1: (0.01, 0.05, 0.10, 0.15), EX2: (0.05, 0.2, 0.4)}
    worst_res = worst_norm = 0.0
    worst_excess = -math.inf
    signs_ok = True
    for ex, rhos in cases.items():
        spec = example_problem(ex)
        op = discretize(spec, 256)
        for rho in rhos:
            a = check_conditions(build_bounds(spec, rho)).a_rho
            for sign in (1, -1):
                pair = solve_pair(op, rho, sign)
                u = pair.u
                res = np.abs(u - pair.lam * apply_T(op, u)).max()
                worst_res = max(worst_res, res)
                worst_norm = max(worst_norm, abs(sup_norm(op, u) - rho))
                worst_excess = max(worst_excess, abs(pair.lam) - a)
                signs_ok &= bool(np.sign(pair.lam) == sign)
    ok = signs_ok and worst_res <= 1e-8 and worst_norm <= 1e-8 and worst_excess <= 1e-8
    record("5 eigenpairs and containment", ok,
           f"both signs {signs_ok}; max residual {worst_res:.2e}; max norm defect {worst_norm:.2e}; "
           f"max |lam| - a(rho) {worst_excess:.3e}")


def test_criterion_6_small_rho_asymptotics():
    rhos = (0.04, 0.02, 0.01)
    phi_dir = -minimize_scalar(lambda t: -(4 / (9 * PI ** 2)) * (math.sin(1.5 * PI * t) + t),
                               bounds=(0, 1), method="bounded", options={"xatol": 1e-12}).fun
    limits = {EX1: 9 * PI ** 2 / 4, EX2: 1 / phi_dir}
    parts, ok = [], True
    for ex, limit in limits.items():
        op = discretize(example_problem(ex), 256)
        errs = [abs(solve_pair(op, rho, 1).lam / rho - limit) / limit for rho in rhos]
        mono = errs[0] > errs[1] > errs[2]
        good = mono and errs[-1] <= 0.02
        ok &= good
        parts.append(f"{ex.value} rel errors " + ", ".join(f"{e:.4f}" for e in errs)
                     + f" (monotone {mono}, final tol 0.02)")
    record("6 small-rho asymptotics", ok, "; ".join(parts))


def test_criterion_7_sandwich():
    rho = 0.1
    rng = np.random.default_rng(7)
    worst = -math.inf
    for ex in (EX1, EX2):
        spec = example_problem(ex)
        op = discretize(spec, 256)
        pair = build_bounds(spec, rho)
        lo, up = pair.F_low(op.nodes), pair.F_up(op.nodes)
        for _ in range(100):
            u = rng.uniform(-rho, rho, op.n)
            tu = apply_T(op, u)
            worst = max(worst, (lo - tu).max(), (tu - up).max())
    record("7 sandwich", worst <= 1e-8, f"max of F_low - Tu and Tu - F_up {worst:.3e} (tol 1e-8)")


def test_criterion_8_mesh_convergence():
    spec = example_problem(EX1)
    lams = [solve_pair(discretize(spec, n), 0.1, 1, tol=1e-12).lam for n in (128, 256, 512)]
    d1, d2 = abs(lams[0] - lams[1]), abs(lams[1] - lams[2])
    ok = 4 * d2 <= d1 + 1e-12
    ratio = d1 / d2 if d2 > 0 else math.inf
    record("8 mesh convergence", ok,
           f"|d(128,256)| {d1:.3e}, |d(256,512)| {d2:.3e}, ratio {ratio:.1f} (needs >= 4)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
