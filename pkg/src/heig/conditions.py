"""Sign conditions on the bound functions and the eigenvalue localization.

Two conditions are tracked under the labels ``5b`` (``F_low`` strictly
positive somewhere) and ``5a`` (``F_up`` strictly negative somewhere).
Either one yields a half-width ``a(rho)`` such that every eigenvalue whose
eigenfunction has sup-norm ``rho`` satisfies ``|lam| <= a(rho)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bounds import BoundPair, ProblemSpec, build_bounds
from .quadrature import QuadratureConfig

__all__ = [
    "ConditionReport",
    "NoConditionError",
    "golden_section_max",
    "locate_max",
    "check_conditions",
    "localization",
    "indicator",
    "threshold_scan",
    "interval_threshold_scan",
    "indicator_is_monotone",
]

log = logging.getLogger(__name__)

SCAN_POINTS = 2001
T_TOL = 1e-10
ZERO_TOL = 1e-12
RHO_TOL = 1e-8

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class NoConditionError(ValueError):
    """Neither sign condition holds, so no localization is available."""


@dataclass(frozen=True)
class ConditionReport:
    rho: float
    holds_5a: bool
    holds_5b: bool
    t_rho_5a: float | None
    t_rho_5b: float | None
    F_up_min: float
    F_low_max: float
    F_up_argmin: float
    F_low_argmax: float
    a_rho: float | None
    source: str | None
    interval: tuple[float, float] = (0.0, 1.0)

    @property
    def t_rho(self) -> float | None:
        """Extremizer behind ``a_rho``."""
        if self.source == "5a":
            return self.t_rho_5a
        return self.t_rho_5b

    @property
    def a_rho_5b(self) -> float | None:
        return self.rho / self.F_low_max if self.holds_5b else None

    @property
    def a_rho_5a(self) -> float | None:
        return -self.rho / self.F_up_min if self.holds_5a else None


def golden_section_max(f: Callable[[float], float], a: float, b: float, tol: float = T_TOL):
    """Maximize a unimodal ``f`` on ``[a, b]``; returns ``(t, f(t))``.

    The endpoints are compared against the interior estimate at the end,
    so a maximum sitting on the boundary is returned exactly.
    """
    lo, hi = float(a), float(b)
    f_lo, f_hi = f(lo), f(hi)
    best = (lo, f_lo) if f_lo >= f_hi else (hi, f_hi)
    if hi - lo <= tol:
        return best
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = f(d)
    for cand in ((c, fc), (d, fd)):
        if cand[1] > best[1]:
            best = cand
    return best


def locate_max(F: Callable, interval=(0.0, 1.0), points: int = SCAN_POINTS, tol: float = T_TOL):
    """Global max of ``F`` on ``interval``: grid scan, then golden section.

    The golden-section search runs on the two grid cells around the best
    grid point. Returns ``(t, F(t))`` with ``F(t)`` taken from the same
    evaluation path as every other call to ``F``.
    """
    a, b = float(interval[0]), float(interval[1])
    if a > b:
        raise ValueError("interval must satisfy lo <= hi")
    if a == b:
        return a, float(F(a))
    grid = np.linspace(a, b, points)
    values = np.asarray(F(grid), dtype=float)
    k = int(np.argmax(values))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, points - 1)]
    t, val = golden_section_max(lambda x: float(F(x)), lo, hi, tol)
    if values[k] > val:
        t, val = float(grid[k]), float(values[k])
    return float(t), float(val)


def check_conditions(bounds: BoundPair, interval=(0.0, 1.0), points: int = SCAN_POINTS) -> ConditionReport:
    """Evaluate both sign conditions on ``interval``; always returns a report."""
    t_low, low_max = locate_max(bounds.F_low, interval, points)
    t_up, neg_up_min = locate_max(lambda t: -np.asarray(bounds.F_up(t)), interval, points)
    up_min = -neg_up_min
    holds_5b = low_max > ZERO_TOL
    holds_5a = up_min < -ZERO_TOL
    candidates = []
    if holds_5b:
        candidates.append((bounds.rho / low_max, "5b"))
    if holds_5a:
        candidates.append((-bounds.rho / up_min, "5a"))
    a_rho, source = min(candidates) if candidates else (None, None)
    return ConditionReport(
        rho=bounds.rho,
        holds_5a=holds_5a,
        holds_5b=holds_5b,
        t_rho_5a=t_up if holds_5a else None,
        t_rho_5b=t_low if holds_5b else None,
        F_up_min=up_min,
        F_low_max=low_max,
        F_up_argmin=t_up,
        F_low_argmax=t_low,
        a_rho=a_rho,
        source=source,
        interval=(float(interval[0]), float(interval[1])),
    )


def localization(report: ConditionReport) -> float:
    """Half-width ``a(rho)``; the smaller bound wins when both conditions hold."""
    bounds = []
    if report.holds_5b:
        bounds.append(report.rho / report.F_low_max)
    if report.holds_5a:
        bounds.append(-report.rho / report.F_up_min)
    if not bounds:
        raise NoConditionError(f"neither sign condition holds at rho={report.rho}")
    return min(bounds)


def _report(spec, rho, interval, cfg, points):
    return check_conditions(build_bounds(spec, rho, cfg), interval, points)


def indicator(spec: ProblemSpec, rho: float, which: str = "5b", interval=(0.0, 1.0),
              cfg: QuadratureConfig | None = None, points: int = SCAN_POINTS) -> bool:
    if which not in ("5a", "5b"):
        raise ValueError("which must be '5a' or '5b'")
    rep = _report(spec, rho, interval, cfg, points)
    return rep.holds_5a if which == "5a" else rep.holds_5b


def threshold_scan(
    spec: ProblemSpec,
    rho_lo: float,
    rho_hi: float,
    which: str = "5b",
    cfg: QuadratureConfig | None = None,
    interval=(0.0, 1.0),
    tol: float = RHO_TOL,
    points: int = SCAN_POINTS,
) -> float | None:
    """``rho`` where the chosen condition flips, by bisection; ``None`` if no flip.

    Assumes a single flip inside ``[rho_lo, rho_hi]``.
    """
    if not rho_lo < rho_hi:
        raise ValueError("need rho_lo < rho_hi")

    def holds(rho):
        return indicator(spec, rho, which, interval, cfg, points)

    lo, hi = float(rho_lo), float(rho_hi)
    at_lo, at_hi = holds(lo), holds(hi)
    if at_lo == at_hi:
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if holds(mid) == at_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def interval_threshold_scan(
    spec: ProblemSpec,
    rho_lo: float,
    rho_hi: float,
    interval: Sequence[float],
    which: str = "5b",
    cfg: QuadratureConfig | None = None,
    tol: float = RHO_TOL,
    points: int = SCAN_POINTS,
) -> float | None:
    """:func:`threshold_scan` with the extremum restricted to ``interval``."""
    a, b = float(interval[0]), float(interval[1])
    if not 0.0 <= a <= b <= 1.0:
        raise ValueError("interval must satisfy 0 <= lo <= hi <= 1")
    return threshold_scan(spec, rho_lo, rho_hi, which, cfg, (a, b), tol, points)


def indicator_is_monotone(flags: Sequence[bool]) -> bool:
    """True when a coarse indicator sequence flips at most once."""
    flips = sum(1 for x, y in zip(flags[:-1], flags[1:]) if x != y)
    return flips <= 1
