"""
The localization region and the solved branches
===============================================

A sweep over ``rho`` with continuation: each row warm-starts from the
previous eigenfunctions. Every eigenvalue found must stay inside
``[-a(rho), a(rho)]``.
"""

from pathlib import Path

import numpy as np

from heig import example_problem, sweep_rho
from heig.svg import Figure

out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)

for ex, hi in (("example1_mixed", 0.14), ("example2_dirichlet", 0.5)):
    rhos = np.linspace(0.01, hi, 14)
    result = sweep_rho(example_problem(ex), rhos, n=128)
    a = np.array([row.a_rho for row in result])
    plus = np.array([row.plus.lam for row in result])
    minus = np.array([row.minus.lam for row in result])
    inside = np.all(np.abs(plus) <= a + 1e-8) and np.all(np.abs(minus) <= a + 1e-8)
    print(f"{ex}: all eigenvalues inside the band: {inside}")
    print(f"   at rho={hi}: a={a[-1]:.4f}, lam+={plus[-1]:.4f}, lam-={minus[-1]:.4f}")
    fig = Figure(f"Localization region, {ex}", "rho", "lambda")
    fig.band(rhos, -a, a, label="[-a, a]").line(rhos, plus, "lambda+").line(rhos, minus, "lambda-")
    fig.save(out / f"region_{ex}.svg")
