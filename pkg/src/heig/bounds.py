"""Pointwise envelopes of the nonlinearity and their kernel integrals.

For a separable nonlinearity ``f(t, u, v) = g(t) * ell(u, v)`` with
``ell_low <= ell <= ell_up`` on the ball of radius ``rho``, the bound
functions are

    F_low(t) = ell_low * (K g+)(t) - ell_up * (K g-)(t)
    F_up(t)  = ell_up  * (K g+)(t) - ell_low * (K g-)(t)

where ``(K phi)(t) = int_0^1 k(t, s) phi(s) ds``. The two kernel sections
``K g+`` and ``K g-`` do not depend on ``rho`` and are cached per
``(kernel, g)`` pair, so a sweep over ``rho`` only rescales them.

Thread safety: :class:`SectionCache` guards its table with a lock, so
bound functions built from the same problem may be evaluated from several
threads at once.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .kernels import Kernel
from .quadrature import DEFAULT_CONFIG, QuadratureConfig, kernel_apply

__all__ = [
    "ProblemSpec",
    "BoundPair",
    "EnvelopeError",
    "SectionCache",
    "sign_split",
    "exp_ratio_envelopes",
    "check_envelopes",
    "build_bounds",
    "build_bounds_separable",
    "build_bounds_general",
    "section_cache",
]

ENVELOPE_SAMPLES = 21


class EnvelopeError(ValueError):
    """User-supplied envelopes contradict sampled values of ``ell`` or ``H``."""


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Definition of ``u = lam * int_0^1 k(t, s) f(s, u(s), H[u]) ds``.

    ``form`` is ``"separable"`` (give ``g``, ``change_points``, ``ell``,
    ``ell_bounds``) or ``"general"`` (give ``f`` and ``f_bounds``).

    ``H(nodes, weights, u)`` maps a tabulated function to a scalar;
    ``H_bounds(rho)`` returns ``(H_low, H_up)`` valid on the ball
    ``||u|| <= rho``. ``ell_bounds(rho)`` returns nonnegative scalars
    ``(ell_low, ell_up)``; ``f_bounds(rho)`` returns two callables of ``t``.
    A separable problem without ``ell`` supports bounds and conditions only.
    """

    kernel: Kernel
    form: str = "separable"
    g: Callable | None = None
    change_points: tuple[float, ...] = ()
    ell: Callable | None = None
    f: Callable | None = None
    H: Callable | None = None
    H_bounds: Callable | None = None
    ell_bounds: Callable | None = None
    f_bounds: Callable | None = None
    breakpoints: tuple[float, ...] = ()
    name: str = "custom"

    def __post_init__(self):
        if self.form not in ("separable", "general"):
            raise ValueError(f"unknown problem form {self.form!r}")
        if self.form == "separable":
            missing = [n for n in ("g", "ell_bounds") if getattr(self, n) is None]
        else:
            missing = [n for n in ("f", "f_bounds") if getattr(self, n) is None]
        if missing:
            raise ValueError(f"{self.form} problem is missing {', '.join(missing)}")
        cps = tuple(sorted(float(c) for c in self.change_points))
        if any(not 0.0 <= c <= 1.0 for c in cps):
            raise ValueError("change points must lie in [0, 1]")
        object.__setattr__(self, "change_points", cps)
        object.__setattr__(self, "breakpoints", tuple(sorted(float(b) for b in self.breakpoints)))

    @property
    def all_breakpoints(self) -> tuple[float, ...]:
        """Interior points where integration panels must be split."""
        pts = set(self.change_points) | set(self.breakpoints)
        return tuple(sorted(p for p in pts if 0.0 < p < 1.0))

    def nonlinearity(self, t, u, v):
        """``f(t, u, v)`` for either form, vectorized in ``t`` and ``u``."""
        if self.form == "separable":
            if self.ell is None:
                raise ValueError(f"problem {self.name!r} has no ell; only its bounds are available")
            return np.asarray(self.g(t), dtype=float) * np.asarray(self.ell(u, v), dtype=float)
        return np.asarray(self.f(t, u, v), dtype=float)


@dataclass(frozen=True)
class BoundPair:
    """The two bound functions for one ``rho``; both accept scalars or arrays."""

    F_low: Callable
    F_up: Callable
    rho: float
    envelopes: tuple[float, float] | None = None


def sign_split(g: Callable, change_points: Sequence[float] = ()):
    """Return ``(g_plus, g_minus)`` with ``g = g_plus - g_minus``.

    ``change_points`` are not needed to form the parts; they are accepted
    so callers pass them alongside and feed the same list to quadrature.
    """

    def g_plus(t):
        return np.maximum(0.0, np.asarray(g(t), dtype=float))

    def g_minus(t):
        return -np.minimum(0.0, np.asarray(g(t), dtype=float))

    return g_plus, g_minus


def exp_ratio_envelopes(rho: float) -> tuple[float, float]:
    """Bounds of ``e^u / int_0^1 e^u`` over ``||u|| <= rho``."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    return float(np.exp(-2.0 * rho)), float(np.exp(2.0 * rho))


def check_envelopes(spec: ProblemSpec, rho: float, samples: int = ENVELOPE_SAMPLES) -> list[str]:
    """Spot-check user envelopes on a ``samples x samples`` grid.

    Returns a list of human-readable violations (empty when consistent).
    """
    problems = []
    if spec.H_bounds is not None:
        h_low, h_up = spec.H_bounds(rho)
        if h_low > h_up:
            problems.append(f"H_low={h_low} exceeds H_up={h_up}")
        if spec.H is not None:
            nodes = np.linspace(0.0, 1.0, 65)
            weights = np.full(nodes.size, 1.0 / (nodes.size - 1))
            weights[[0, -1]] *= 0.5
            rng = np.random.default_rng(0)
            trial = [np.full(nodes.size, c) for c in np.linspace(-rho, rho, samples)]
            trial += [rho * np.sin(np.pi * k * nodes) for k in (1, 2, 3)]
            trial += [rng.uniform(-rho, rho, nodes.size) for _ in range(samples)]
            vals = np.array([spec.H(nodes, weights, u) for u in trial])
            slack = 1e-12 * max(1.0, abs(h_low), abs(h_up))
            if np.any(vals < h_low - slack) or np.any(vals > h_up + slack):
                problems.append(
                    f"H leaves [{h_low:.6g}, {h_up:.6g}] on the ball (sampled range "
                    f"[{vals.min():.6g}, {vals.max():.6g}])"
                )
    else:
        h_low = h_up = 0.0
    if spec.form == "separable":
        lo, up = spec.ell_bounds(rho)
        if lo < 0 or up < lo:
            problems.append(f"ell bounds must satisfy 0 <= ell_low <= ell_up, got ({lo}, {up})")
        if spec.ell is None:
            return problems
        uu, vv = np.meshgrid(np.linspace(-rho, rho, samples), np.linspace(h_low, h_up, samples))
        vals = np.asarray(spec.ell(uu, vv), dtype=float)
        slack = 1e-12 * max(1.0, up)
        if np.any(vals < lo - slack) or np.any(vals > up + slack):
            problems.append(
                f"ell leaves [{lo:.6g}, {up:.6g}] on the sample box (sampled range "
                f"[{vals.min():.6g}, {vals.max():.6g}])"
            )
    return problems


class SectionCache:
    """Memoized kernel sections ``t -> ((K g+)(t), (K g-)(t))``."""

    def __init__(self, kernel: Kernel, g: Callable, change_points=(), breakpoints=(), cfg=None):
        self.kernel = kernel
        self.cfg = cfg or DEFAULT_CONFIG
        self.g_plus, self.g_minus = sign_split(g, change_points)
        self.points = tuple(sorted(set(change_points) | set(breakpoints)))
        self._table: dict[float, tuple[float, float]] = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._table)

    def _compute(self, t: float) -> tuple[float, float]:
        plus = kernel_apply(self.kernel, self.g_plus, t, self.cfg, self.points)
        minus = kernel_apply(self.kernel, self.g_minus, t, self.cfg, self.points)
        return plus, minus

    def values(self, t):
        """Both sections at ``t`` (scalar or array); arrays are evaluated pointwise."""
        t_arr = np.asarray(t, dtype=float)
        flat = t_arr.ravel()
        plus = np.empty(flat.size)
        minus = np.empty(flat.size)
        for i, ti in enumerate(flat):
            key = float(ti)
            hit = self._table.get(key)
            if hit is None:
                hit = self._compute(key)
                with self._lock:
                    self._table.setdefault(key, hit)
            plus[i], minus[i] = hit
        if t_arr.ndim == 0:
            return float(plus[0]), float(minus[0])
        return plus.reshape(t_arr.shape), minus.reshape(t_arr.shape)


_SECTION_CACHES: dict[tuple, SectionCache] = {}
_CACHES_LOCK = threading.Lock()


def section_cache(spec: ProblemSpec, cfg: QuadratureConfig | None = None) -> SectionCache:
    """Shared :class:`SectionCache` for the problem's ``(kernel, g)`` pair."""
    cfg = cfg or DEFAULT_CONFIG
    key = (spec.kernel, spec.g, spec.change_points, spec.breakpoints, cfg)
    with _CACHES_LOCK:
        cache = _SECTION_CACHES.get(key)
        if cache is None:
            cache = SectionCache(spec.kernel, spec.g, spec.change_points, spec.breakpoints, cfg)
            _SECTION_CACHES[key] = cache
    return cache


def build_bounds_separable(
    spec: ProblemSpec, rho: float, cfg: QuadratureConfig | None = None, validate: bool = True
) -> BoundPair:
    if spec.form != "separable":
        raise ValueError("build_bounds_separable needs a separable problem")
    if not rho > 0:
        raise ValueError("rho must be positive")
    if validate:
        issues = check_envelopes(spec, rho)
        if issues:
            raise EnvelopeError("; ".join(issues))
    lo, up = (float(x) for x in spec.ell_bounds(rho))
    cache = section_cache(spec, cfg)

    def F_low(t):
        plus, minus = cache.values(t)
        return lo * plus - up * minus

    def F_up(t):
        plus, minus = cache.values(t)
        return up * plus - lo * minus

    return BoundPair(F_low, F_up, float(rho), (lo, up))


def _tabulated(func, grid):
    values = np.broadcast_to(np.asarray(func(grid), dtype=float), grid.shape).copy()

    def interp(s):
        return np.interp(s, grid, values)

    return interp


def build_bounds_general(
    spec: ProblemSpec,
    rho: float,
    grid_n: int | None = None,
    cfg: QuadratureConfig | None = None,
) -> BoundPair:
    """Bound functions from pointwise envelopes ``f_bounds(rho)``.

    With ``grid_n`` the envelopes are sampled on ``grid_n`` uniform points
    and interpolated linearly (the sample points become quadrature
    breakpoints). With ``grid_n=None`` the envelope callables are
    integrated directly.
    """
    if spec.f_bounds is None:
        raise ValueError("build_bounds_general needs f_bounds")
    if not rho > 0:
        raise ValueError("rho must be positive")
    cfg = cfg or DEFAULT_CONFIG
    f_low, f_up = spec.f_bounds(rho)
    points = list(spec.all_breakpoints)
    if grid_n is not None:
        if grid_n < 2:
            raise ValueError("grid_n must be >= 2")
        grid = np.linspace(0.0, 1.0, grid_n)
        f_low, f_up = _tabulated(f_low, grid), _tabulated(f_up, grid)
        points = sorted(set(points) | set(grid[1:-1].tolist()))
    cache_low: dict[float, float] = {}
    cache_up: dict[float, float] = {}

    def make(func, cache):
        def F(t):
            t_arr = np.asarray(t, dtype=float)
            out = np.empty(t_arr.size)
            for i, ti in enumerate(t_arr.ravel()):
                key = float(ti)
                if key not in cache:
                    cache[key] = kernel_apply(spec.kernel, func, key, cfg, points)
                out[i] = cache[key]
            return float(out[0]) if t_arr.ndim == 0 else out.reshape(t_arr.shape)

        return F

    return BoundPair(make(f_low, cache_low), make(f_up, cache_up), float(rho))


def build_bounds(spec: ProblemSpec, rho: float, cfg: QuadratureConfig | None = None) -> BoundPair:
    """Dispatch on ``spec.form``."""
    if spec.form == "separable":
        return build_bounds_separable(spec, rho, cfg)
    return build_bounds_general(spec, rho, None, cfg)
