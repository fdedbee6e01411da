"""
Where the lower bound stops being positive
==========================================

The condition ``max F_low > 0`` holds for small ``rho`` and fails beyond a
critical value. We scan a coarse grid, then bisect the flip, for both
boundary conditions. For the Dirichlet kernel the maximum can also be
restricted to ``[2/3, 1]``, which flips much earlier.
"""

import math

import numpy as np

from heig import build_bounds, check_conditions, example_problem, interval_threshold_scan, threshold_scan
from heig.oracles import oracle_threshold

for ex, hi in (("example1_mixed", 0.4), ("example2_dirichlet", 0.8)):
    spec = example_problem(ex)
    grid = np.linspace(0.02, hi, 9)
    flags = [check_conditions(build_bounds(spec, r)).holds_5b for r in grid]
    print(ex, "coarse indicator:", "".join("+" if f else "." for f in flags))
    star = threshold_scan(spec, grid[0], grid[-1])
    print(f"  threshold {star:.8f}  closed form {oracle_threshold(ex):.8f}")

spec = example_problem("example2_dirichlet")
tail = interval_threshold_scan(spec, 0.05, 0.5, (2 / 3, 1))
print(f"example2 on [2/3, 1]: {tail:.8f}  closed form {math.log(math.pi / (math.pi - 2)) / 4:.8f}")

# the maximizer moves left as rho grows
for rho in (0.01, 0.08, 0.16):
    rep = check_conditions(build_bounds(example_problem("example1_mixed"), rho))
    print(f"rho={rho}: t_rho={rep.t_rho_5b:.6f}, a(rho)={rep.a_rho_5b:.6f}")
