"""Closed-form references for the two worked examples.

Everything here is written directly from the piecewise formulas for the
kernel integrals of ``sin(3 pi s / 2)`` over ``[0, 2/3]`` and ``[2/3, 1]``;
nothing is shared with the quadrature path, so these functions can serve
as independent test references.
"""

from __future__ import annotations

import math

import numpy as np

from .problems import ExampleId

__all__ = [
    "ExampleId",
    "oracle_sections",
    "oracle_F_low",
    "oracle_F_up",
    "oracle_t_rho",
    "oracle_F_low_max",
    "oracle_a_rho",
    "oracle_threshold",
    "linearized_profile",
    "THRESHOLD_KINDS",
]

PI = math.pi
C_SIN = 4.0 / (9.0 * PI ** 2)
C_MIX = 2.0 / (3.0 * PI)
C_DIR = 2.0 / (9.0 * PI)
C_EDGE = 4.0 / (9.0 * PI)
TWO_THIRDS = 2.0 / 3.0

THRESHOLD_KINDS = ("global", "interval_tail", "interval_head")


def _t_array(t):
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0.0) or np.any(t > 1.0):
        raise ValueError("t must lie in [0, 1]")
    return t


def oracle_sections(ex, t):
    """``(int_0^{2/3} k sin, int_{2/3}^1 k sin)`` at ``t``."""
    ex = ExampleId.parse(ex)
    t = _t_array(t)
    sin = np.sin(1.5 * PI * t)
    head = t <= TWO_THIRDS
    if ex is ExampleId.EXAMPLE1_MIXED:
        plus = np.where(head, C_SIN * sin + C_MIX * t, C_EDGE)
        minus = np.where(head, -C_MIX * t, C_SIN * sin - C_EDGE)
    else:
        plus = np.where(head, C_SIN * sin + C_DIR * t, C_EDGE * (1.0 - t))
        minus = np.where(
            head,
            4.0 * t / (9.0 * PI ** 2) - C_DIR * t,
            C_SIN * sin + C_EDGE * (t - 1.0) + 4.0 * t / (9.0 * PI ** 2),
        )
    if plus.ndim == 0:
        return float(plus), float(minus)
    return plus, minus


def oracle_F_low(ex, rho, t):
    plus, minus = oracle_sections(ex, t)
    return math.exp(-2.0 * rho) * plus + math.exp(2.0 * rho) * minus


def oracle_F_up(ex, rho, t):
    plus, minus = oracle_sections(ex, t)
    return math.exp(2.0 * rho) * plus + math.exp(-2.0 * rho) * minus


def oracle_threshold(ex, which: str = "global") -> float:
    """Critical ``rho`` below which ``F_low`` has a positive maximum.

    ``interval_tail`` restricts the maximum to ``[2/3, 1]`` and
    ``interval_head`` to ``[0, 2/3]``; both exist only for the Dirichlet
    example.
    """
    ex = ExampleId.parse(ex)
    if which not in THRESHOLD_KINDS:
        raise ValueError(f"unknown threshold kind {which!r}")
    if ex is ExampleId.EXAMPLE1_MIXED:
        if which != "global":
            raise ValueError("example1 has only a global threshold")
        return math.log(2.0) / 4.0
    if which == "interval_tail":
        return math.log(PI / (PI - 2.0)) / 4.0
    return math.log(4.0 * PI / (PI - 2.0)) / 4.0


def oracle_t_rho(ex, rho: float) -> float:
    ex = ExampleId.parse(ex)
    if not rho > 0:
        raise ValueError("rho must be positive")
    if rho >= oracle_threshold(ex, "global"):
        return 0.0
    if ex is ExampleId.EXAMPLE1_MIXED:
        arg = math.exp(4.0 * rho) - 1.0
    else:
        arg = math.exp(4.0 * rho) * (PI - 2.0) / (3.0 * PI) - 1.0 / 3.0
    return 2.0 / (3.0 * PI) * math.acos(arg)


def oracle_F_low_max(ex, rho: float) -> float:
    return float(oracle_F_low(ex, rho, oracle_t_rho(ex, rho)))


def oracle_a_rho(ex, rho: float) -> float | None:
    """``rho / F_low(t_rho)`` inside the band, ``None`` outside."""
    peak = oracle_F_low_max(ex, rho)
    return rho / peak if peak > 0 else None


def linearized_profile(ex, t):
    """Solution of ``-u'' = sin(3 pi t / 2)`` under the example's boundary conditions."""
    ex = ExampleId.parse(ex)
    t = _t_array(t)
    sin = np.sin(1.5 * PI * t)
    out = C_SIN * sin if ex is ExampleId.EXAMPLE1_MIXED else C_SIN * (sin + t)
    return float(out) if out.ndim == 0 else out
