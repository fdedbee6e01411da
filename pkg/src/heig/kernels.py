"""Green's functions on the unit square and a registry for user kernels.

Both built-in kernels are continuous and nonnegative but have a derivative
jump across the diagonal ``s == t``; the ``kink_on_diagonal`` flag lets the
quadrature layer split integration panels there.
"""

from __future__ import annotations

import csv
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

__all__ = [
    "Kernel",
    "KernelDomainError",
    "DuplicateKernelError",
    "green_mixed",
    "green_dirichlet",
    "GREEN_MIXED",
    "GREEN_DIRICHLET",
    "register_kernel",
    "get_kernel",
    "unregister_kernel",
    "load_kernel_csv",
]

NONNEGATIVITY_SAMPLES = 101


class KernelDomainError(ValueError):
    """Raised when a kernel is evaluated outside the unit square."""


class DuplicateKernelError(KeyError):
    pass


def _check_unit(name, x):
    x = np.asarray(x, dtype=float)
    # NaN fails both comparisons, so this also rejects non-finite input
    if not ((x >= 0.0) & (x <= 1.0)).all():
        raise KernelDomainError(f"{name} must lie in [0, 1]")
    return x


def green_mixed(t, s):
    """Green's function of ``-u'' = h`` with ``u(0) = u'(1) = 0``: ``min(t, s)``."""
    t = _check_unit("t", t)
    s = _check_unit("s", s)
    out = np.minimum(t, s)
    return float(out) if out.ndim == 0 else out


def green_dirichlet(t, s):
    """Green's function of ``-u'' = h`` with ``u(0) = u(1) = 0``.

    ``t (1 - s)`` below the diagonal, ``s (1 - t)`` above it.
    """
    t = _check_unit("t", t)
    s = _check_unit("s", s)
    out = np.where(t <= s, t * (1.0 - s), s * (1.0 - t))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class Kernel:
    """An evaluable kernel ``k(t, s)`` on ``[0, 1]^2``.

    ``func`` must accept broadcastable numpy arrays. Calling the kernel
    validates the domain; out-of-range arguments raise
    :class:`KernelDomainError` rather than being clamped.
    """

    name: str
    func: Callable
    kink_on_diagonal: bool = False
    warnings: tuple[str, ...] = field(default=())

    def __call__(self, t, s):
        t = _check_unit("t", t)
        s = _check_unit("s", s)
        out = np.asarray(self.func(t, s), dtype=float)
        out = np.broadcast_to(out, np.broadcast_shapes(t.shape, s.shape))
        return float(out) if out.ndim == 0 else np.array(out)

    def eval(self, t, s):
        return self(t, s)

    def matrix(self, t, s):
        """Kernel values ``k(t_i, s_j)`` as a ``len(t) x len(s)`` array."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return np.asarray(self(t[:, None], s[None, :]), dtype=float)

    @property
    def is_nonnegative(self) -> bool:
        return not self.warnings


GREEN_MIXED = Kernel("green_mixed", green_mixed, kink_on_diagonal=True)
GREEN_DIRICHLET = Kernel("green_dirichlet", green_dirichlet, kink_on_diagonal=True)

_REGISTRY: dict[str, Kernel] = {
    GREEN_MIXED.name: GREEN_MIXED,
    GREEN_DIRICHLET.name: GREEN_DIRICHLET,
}
_REGISTRY_LOCK = threading.Lock()
_BUILTIN = frozenset(_REGISTRY)


def _sample_nonnegativity(func) -> tuple[str, ...]:
    grid = np.linspace(0.0, 1.0, NONNEGATIVITY_SAMPLES)
    values = np.broadcast_to(
        np.asarray(func(grid[:, None], grid[None, :]), dtype=float),
        (grid.size, grid.size),
    )
    if not np.all(np.isfinite(values)):
        return ("kernel produced non-finite values on the sample grid",)
    worst = float(values.min())
    if worst < 0.0:
        i, j = np.unravel_index(np.argmin(values), values.shape)
        return (
            f"kernel is negative on the sample grid (min {worst:.3g} at "
            f"t={grid[i]:.3g}, s={grid[j]:.3g}); existence hypotheses require k >= 0",
        )
    return ()


def register_kernel(name: str, func: Callable, kink: bool = False) -> Kernel:
    """Register a user kernel under ``name`` and return it.

    Nonnegativity is sampled on a 101 x 101 grid; a violation does not
    reject the kernel but is recorded in ``Kernel.warnings``.
    """
    if isinstance(func, Kernel):
        func = func.func
    kernel = Kernel(name, func, kink_on_diagonal=bool(kink), warnings=_sample_nonnegativity(func))
    with _REGISTRY_LOCK:
        if name in _REGISTRY:
            raise DuplicateKernelError(f"kernel {name!r} is already registered")
        _REGISTRY[name] = kernel
    return kernel


def unregister_kernel(name: str) -> None:
    if name in _BUILTIN:
        raise ValueError(f"cannot remove built-in kernel {name!r}")
    with _REGISTRY_LOCK:
        _REGISTRY.pop(name, None)


def get_kernel(name: str) -> Kernel:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown kernel {name!r}; known: {sorted(_REGISTRY)}") from None


def load_kernel_csv(path, name: str | None = None, kink: bool = False, register: bool = False) -> Kernel:
    """Read a tabulated kernel (header ``t,s,k``) and interpolate bilinearly.

    The table must cover a full rectangular grid whose ``t`` and ``s`` axes
    both include 0 and 1.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["t", "s", "k"]:
            raise ValueError(f"{path}: header must be 't,s,k'")
        rows = [(float(r["t"]), float(r["s"]), float(r["k"])) for r in reader]
    if not rows:
        raise ValueError(f"{path}: empty kernel table")
    data = np.array(rows)
    ts = np.unique(data[:, 0])
    ss = np.unique(data[:, 1])
    for axis, label in ((ts, "t"), (ss, "s")):
        if axis[0] != 0.0 or axis[-1] != 1.0:
            raise ValueError(f"{path}: {label} grid must include 0 and 1")
    if len(rows) != ts.size * ss.size:
        raise ValueError(f"{path}: grid is not rectangular")
    table = np.full((ts.size, ss.size), np.nan)
    table[np.searchsorted(ts, data[:, 0]), np.searchsorted(ss, data[:, 1])] = data[:, 2]
    if np.isnan(table).any():
        raise ValueError(f"{path}: grid is not rectangular (duplicate or missing points)")
    interp = RegularGridInterpolator((ts, ss), table, method="linear")

    def func(t, s):
        t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        pts = np.stack([t.ravel(), s.ravel()], axis=-1)
        return interp(pts).reshape(t.shape)

    name = name or path.stem
    if register:
        return register_kernel(name, func, kink)
    return Kernel(name, func, kink_on_diagonal=bool(kink), warnings=_sample_nonnegativity(func))
