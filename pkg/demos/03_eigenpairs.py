"""
Eigenpairs on the sphere ||u|| = rho
====================================

The Nystrom operator is built once; each solve finds ``lam`` and ``u`` with
``u = lam T u`` and ``max |u| = rho``, one branch of each sign. The pair is
then re-checked on a grid twice as fine and against the band ``a(rho)``.
"""

import math
from pathlib import Path

import numpy as np

from heig import build_bounds, check_conditions, discretize, example_problem, solve_pair, verify_pair
from heig.svg import Figure

out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)

spec = example_problem("example2_dirichlet")
op = discretize(spec, 256)
rho = 0.2
report = check_conditions(build_bounds(spec, rho))

fig = Figure(f"Dirichlet kernel, eigenfunctions at rho={rho}", "t", "u")
for sign in (1, -1):
    pair = solve_pair(op, rho, sign)
    check = verify_pair(pair, op, report)
    print(f"sign {sign:+d}: lam={pair.lam:.10f} via {pair.method} in {pair.iterations} steps")
    print(f"   residual {pair.residual:.1e} (refined {check.residual_refined:.1e}), "
          f"|lam| <= a(rho)={report.a_rho:.6f}: {check.contained}")
    fig.line(op.nodes, pair.u, f"lam = {pair.lam:.4f}")
fig.save(out / "eigenfunctions.svg")

# for small rho the ratio lam / rho approaches the linearized value
mixed = discretize(example_problem("example1_mixed"), 256)
for r in (0.04, 0.02, 0.01, 0.005):
    lam = solve_pair(mixed, r, 1).lam
    print(f"rho={r:<6} lam/rho={lam / r:.5f}   (limit {9 * math.pi ** 2 / 4:.5f})")
