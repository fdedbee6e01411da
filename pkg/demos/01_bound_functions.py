"""
Bound functions for the mixed problem
=====================================

For ``||u|| <= rho`` the ratio ``e^u / int e^u`` lies between ``e^{-2 rho}``
and ``e^{2 rho}``. Integrating the weight ``sin(3 pi s / 2)`` against the
kernel with those envelopes gives the lower and upper bound functions.
Here we tabulate them, compare with the closed forms and write an SVG.
"""

from pathlib import Path

import numpy as np

from heig import build_bounds, example_problem
from heig.oracles import oracle_F_low, oracle_F_up
from heig.svg import Figure

out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)

spec = example_problem("example1_mixed")
t = np.linspace(0, 1, 401)

# small rho: F_low is positive on part of (0, 2/3)
fig = Figure("Mixed kernel, bound functions", "t", "F")
for rho, dashed in ((0.1, False), (1.0, True)):
    pair = build_bounds(spec, rho)
    low, up = pair.F_low(t), pair.F_up(t)
    err = max(np.abs(low - oracle_F_low("example1_mixed", rho, t)).max(),
              np.abs(up - oracle_F_up("example1_mixed", rho, t)).max())
    print(f"rho={rho}: max F_low = {low.max():.6f}, max |numeric - closed form| = {err:.2e}")
    fig.line(t, low, f"F_low, rho={rho}", dashed=dashed)
    fig.line(t, up, f"F_up, rho={rho}", dashed=dashed)

# at rho = 1 the lower bound never goes positive: max is F_low(0) = 0
fig.save(out / "bound_functions.svg")
print("wrote", out / "bound_functions.svg")
