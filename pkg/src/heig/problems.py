"""Ready-made problem definitions.

The two worked examples share the nonlinearity

    f(t, u, H[u]) = sin(3 pi t / 2) * e^u / H[u],   H[u] = int_0^1 e^u,

and differ only in the boundary conditions (hence the kernel).
"""

from __future__ import annotations

from enum import Enum
from typing import Callable

import numpy as np

from .bounds import ProblemSpec, exp_ratio_envelopes
from .kernels import GREEN_DIRICHLET, GREEN_MIXED, Kernel

__all__ = [
    "ExampleId",
    "sine_weight",
    "exp_integral",
    "exp_integral_bounds",
    "exp_ratio",
    "example_problem",
    "linear_problem",
    "as_general",
]

SIGN_CHANGE = 2.0 / 3.0


class ExampleId(str, Enum):
    EXAMPLE1_MIXED = "example1_mixed"
    EXAMPLE2_DIRICHLET = "example2_dirichlet"

    @classmethod
    def parse(cls, value) -> "ExampleId":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown example {value!r}; expected one of {[e.value for e in cls]}"
            ) from None


def sine_weight(t):
    """``sin(3 pi t / 2)``: positive on (0, 2/3), negative on (2/3, 1]."""
    return np.sin(1.5 * np.pi * np.asarray(t, dtype=float))


def exp_integral(nodes, weights, u):
    return float(np.dot(weights, np.exp(u)))


def exp_integral_bounds(rho):
    return float(np.exp(-rho)), float(np.exp(rho))


def exp_ratio(u, v):
    return np.exp(u) / v


def example_problem(example) -> ProblemSpec:
    ex = ExampleId.parse(example)
    kernel = GREEN_MIXED if ex is ExampleId.EXAMPLE1_MIXED else GREEN_DIRICHLET
    return ProblemSpec(
        kernel=kernel,
        form="separable",
        g=sine_weight,
        change_points=(SIGN_CHANGE,),
        ell=exp_ratio,
        H=exp_integral,
        H_bounds=exp_integral_bounds,
        ell_bounds=exp_ratio_envelopes,
        name=ex.value,
    )


def _one(u, v):
    return np.ones(np.broadcast_shapes(np.shape(u), np.shape(v)))


def linear_problem(kernel: Kernel, g: Callable = sine_weight, change_points=(SIGN_CHANGE,)) -> ProblemSpec:
    """``f = g``: the nonlinearity reduces to a fixed weight (``ell = 1``)."""
    return ProblemSpec(
        kernel=kernel,
        form="separable",
        g=g,
        change_points=tuple(change_points),
        ell=_one,
        H=None,
        H_bounds=None,
        ell_bounds=lambda rho: (1.0, 1.0),
        name=f"linear_{kernel.name}",
    )


def as_general(spec: ProblemSpec) -> ProblemSpec:
    """Re-express a separable problem through ``f`` and pointwise envelopes."""
    if spec.form != "separable":
        return spec
    g, ell = spec.g, spec.ell

    def f(t, u, v):
        return np.asarray(g(t), dtype=float) * np.asarray(ell(u, v), dtype=float)

    def f_bounds(rho):
        lo, up = spec.ell_bounds(rho)

        def f_low(t):
            gt = np.asarray(g(t), dtype=float)
            return lo * np.maximum(gt, 0.0) + up * np.minimum(gt, 0.0)

        def f_up(t):
            gt = np.asarray(g(t), dtype=float)
            return up * np.maximum(gt, 0.0) + lo * np.minimum(gt, 0.0)

        return f_low, f_up

    return ProblemSpec(
        kernel=spec.kernel,
        form="general",
        f=f,
        f_bounds=f_bounds,
        H=spec.H,
        H_bounds=spec.H_bounds,
        breakpoints=spec.change_points + spec.breakpoints,
        name=f"{spec.name}_general",
    )
