"""Nystrom discretization of the Hammerstein operator and eigenpair solver.

The operator ``(T u)(t) = int_0^1 k(t, s) f(s, u(s), H[u]) ds`` is replaced
by composite Newton-Cotes sums (Simpson, closed with a 3/8 panel when a
segment has an odd number of cells). Nodes are uniform inside each segment
between consecutive breakpoints of the problem, and for a kernel with a
diagonal kink row ``i`` integrates ``[0, t_i]`` and ``[t_i, 1]`` separately.

Eigenpairs ``u = lam * T u`` with ``||u||_inf = rho`` are found by a damped
projective iteration, falling back to Newton's method on the system
augmented with the norm constraint at the active (max-|u|) node.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .bounds import ProblemSpec, build_bounds
from .conditions import ConditionReport, check_conditions
from .quadrature import QuadratureConfig, kernel_apply

__all__ = [
    "DiscreteOperator",
    "EigenPair",
    "PairVerification",
    "SweepRow",
    "SweepResult",
    "NoConvergenceError",
    "DegenerateOperatorError",
    "NonFiniteError",
    "newton_cotes_weights",
    "discretize",
    "apply_T",
    "sup_norm",
    "solve_pair",
    "verify_pair",
    "sweep_rho",
    "worker_count",
]

log = logging.getLogger(__name__)

THETA = 0.5
PROJECTIVE_ITERS = 500
STALL_WINDOW = 50
NEWTON_ITERS = 60
MAX_INDEX_SWITCHES = 10
TINY_NORM = 1e-300


class NoConvergenceError(RuntimeError):
    """The solver gave up; ``best`` holds the best iterate found."""

    def __init__(self, message, best=None, diagnostics=None):
        super().__init__(message)
        self.best = best
        self.diagnostics = diagnostics or {}


class DegenerateOperatorError(ZeroDivisionError):
    """``||T u||`` vanished; usually the sign conditions fail for this ``rho``."""


class NonFiniteError(ArithmeticError):
    pass


def newton_cotes_weights(cells: int) -> np.ndarray:
    """Composite closed Newton-Cotes weights for ``cells`` unit-width cells."""
    if cells < 1:
        raise ValueError("need at least one cell")
    w = np.zeros(cells + 1)
    if cells == 1:
        w[:] = 0.5
        return w
    simpson_cells = cells if cells % 2 == 0 else cells - 3
    for j in range(0, simpson_cells, 2):
        w[j:j + 3] += (1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0)
    if simpson_cells != cells:
        w[-4:] += (3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0)
    return w


def _split_weights(nodes, cuts):
    w = np.zeros(nodes.size)
    for a, b in zip(cuts[:-1], cuts[1:]):
        h = (nodes[b] - nodes[a]) / (b - a)
        w[a:b + 1] += h * newton_cotes_weights(b - a)
    return w


def _allocate_cells(lengths, total):
    # largest-remainder apportionment, at least one cell per segment
    raw = np.asarray(lengths) * total
    cells = np.maximum(np.floor(raw).astype(int), 1)
    while cells.sum() > total:
        cells[np.argmax(cells)] -= 1
    order = np.argsort(-(raw - np.floor(raw)), kind="stable")
    k = 0
    while cells.sum() < total:
        cells[order[k % len(order)]] += 1
        k += 1
    return cells


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Nystrom realization of ``T`` on ``n`` nodes.

    ``matrix[i, j]`` is ``row_weights[i, j] * kernel_matrix[i, j]`` plus
    product-rule entries for cells cut off alone by the diagonal split;
    ``weights`` is the unsplit rule used for ``H[u]``.
    """

    spec: ProblemSpec
    nodes: np.ndarray
    weights: np.ndarray
    row_weights: np.ndarray
    kernel_matrix: np.ndarray
    matrix: np.ndarray
    segment_starts: tuple[int, ...]

    @property
    def n(self) -> int:
        return self.nodes.size

    def segments_containing(self, i: int) -> list[tuple[int, int]]:
        """Index ranges ``(a, b)`` of the smooth segments that contain node ``i``."""
        bounds = self.segment_starts + (self.n - 1,)
        return [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if a <= i <= b]


_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


def _single_cell_entries(kernel, nodes, t, a, seg):
    """Product-rule entries for ``int_{s_a}^{s_a+1} k(t, s) phi(s) ds``.

    ``phi`` is replaced by its cubic interpolant on four nodes of the smooth
    segment ``seg`` nearest the cell; ``k`` is integrated exactly enough by
    a 6-point Gauss rule since the cell lies on one side of the diagonal.
    Returns ``(stencil, entries)``.
    """
    lo_seg, hi_seg = seg
    if hi_seg - lo_seg < 3:
        stencil = np.array([a, a + 1])
    else:
        lo = min(max(a - 1, lo_seg), hi_seg - 3)
        stencil = np.arange(lo, lo + 4)
    x0, x1 = nodes[a], nodes[a + 1]
    xq = 0.5 * (x0 + x1) + 0.5 * (x1 - x0) * _GL_X
    wq = 0.5 * (x1 - x0) * _GL_W * kernel(np.full_like(xq, t), xq)
    xs = nodes[stencil]
    basis = np.ones((xq.size, stencil.size))
    for j in range(stencil.size):
        for m in range(stencil.size):
            if m != j:
                basis[:, j] *= (xq - xs[m]) / (xs[j] - xs[m])
    return stencil, wq @ basis


def discretize(spec: ProblemSpec, n: int) -> DiscreteOperator:
    if n < 8:
        raise ValueError("n must be at least 8")
    if spec.form == "separable" and spec.ell is None:
        raise ValueError(f"problem {spec.name!r} has no ell; it cannot be discretized")
    edges = np.array([0.0, *spec.all_breakpoints, 1.0])
    cells = _allocate_cells(np.diff(edges), n - 1)
    pieces = [np.linspace(edges[k], edges[k + 1], cells[k] + 1) for k in range(cells.size)]
    nodes = np.concatenate([pieces[0]] + [p[1:] for p in pieces[1:]])
    starts = tuple(int(x) for x in np.concatenate([[0], np.cumsum(cells)[:-1]]))
    seg_cuts = sorted(set(starts) | {n - 1})
    segments = list(zip(seg_cuts[:-1], seg_cuts[1:]))
    weights = _split_weights(nodes, seg_cuts)
    kmat = spec.kernel.matrix(nodes, nodes)
    if spec.kernel.kink_on_diagonal:
        row_weights = np.empty((n, n))
        extra = np.zeros((n, n))
        for i in range(n):
            cuts = sorted(set(seg_cuts) | {i})
            w = np.zeros(n)
            for a, b in zip(cuts[:-1], cuts[1:]):
                if b - a == 1:
                    # a lone cell next to the diagonal: trapezoid would be O(h^3)
                    seg = next(sg for sg in segments if sg[0] <= a < sg[1])
                    stencil, entries = _single_cell_entries(spec.kernel, nodes, nodes[i], a, seg)
                    extra[i, stencil] += entries
                else:
                    h = (nodes[b] - nodes[a]) / (b - a)
                    w[a:b + 1] += h * newton_cotes_weights(b - a)
            row_weights[i] = w
    else:
        row_weights = np.tile(weights, (n, 1))
        extra = 0.0
    matrix = row_weights * kmat + extra
    for arr in (nodes, weights, row_weights, kmat, matrix):
        arr.setflags(write=False)
    return DiscreteOperator(spec, nodes, weights, row_weights, kmat, matrix, starts)


def _functional(op: DiscreteOperator, u) -> float:
    if op.spec.H is None:
        return 0.0
    return float(op.spec.H(op.nodes, op.weights, u))


def apply_T(op: DiscreteOperator, u) -> np.ndarray:
    """``(T u)_i = sum_j M_ij f(s_j, u_j, H[u])`` with ``H`` on the same rule."""
    u = np.asarray(u, dtype=float)
    if u.shape != op.nodes.shape:
        raise ValueError(f"u must have shape {op.nodes.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        h = _functional(op, u)
        fvals = op.spec.nonlinearity(op.nodes, u, h)
    if not (math.isfinite(h) and np.all(np.isfinite(fvals))):
        raise NonFiniteError("nonlinearity or functional overflowed")
    return op.matrix @ fvals


def _peak_window(op, values, i):
    segments = op.segments_containing(i)
    if len(segments) == 2:
        # a node shared by two segments goes with the side of its larger neighbour
        left, right = segments
        segments = [left] if abs(values[i - 1]) >= abs(values[i + 1]) else [right]
    a, b = segments[0]
    if b - a < 4:
        a, b = 0, op.n - 1
    lo = min(max(i - 2, a), b - 4)
    return np.arange(lo, lo + 5)


def _local_peak(t, v, i, window):
    """Largest ``|p|`` near ``t[i]`` for the quartic ``p`` through ``window``."""
    tc = t[i]
    h = t[min(i + 1, t.size - 1)] - t[max(i - 1, 0)]
    x = (t[window] - tc) / h
    coef = np.polyfit(x, v[window], 4)
    a = (t[max(i - 1, 0)] - tc) / h
    b = (t[min(i + 1, t.size - 1)] - tc) / h
    roots = np.roots(np.polyder(coef))
    roots = roots[np.abs(roots.imag) < 1e-12].real
    roots = roots[(roots > a) & (roots < b)]
    best = abs(v[i])
    if roots.size:
        best = max(best, float(np.abs(np.polyval(coef, roots)).max()))
    return best


def sup_norm(op: DiscreteOperator, values) -> float:
    """Sup-norm of the function tabulated by ``values``.

    The node maximum is refined with the quartic through the five nodes
    around it (kept inside one smooth segment when possible), so the result
    does not jump as the true peak moves between nodes.
    """
    values = np.asarray(values, dtype=float)
    i = int(np.argmax(np.abs(values)))
    if values[i] == 0.0:
        return 0.0
    return _local_peak(op.nodes, values, i, _peak_window(op, values, i))


@dataclass(frozen=True, eq=False)
class EigenPair:
    lam: float
    u: np.ndarray
    rho: float
    residual: float
    norm_defect: float
    iterations: int
    method: str
    sign: int
    nodes: np.ndarray = field(repr=False, default=None)

    @property
    def lambda_(self) -> float:
        return self.lam


def _sign(sign) -> int:
    if sign in (1, "+", "plus", "pos"):
        return 1
    if sign in (-1, "-", "minus", "neg"):
        return -1
    raise ValueError(f"sign must be + or -, got {sign!r}")


def _initial_guess(op, rho, sigma):
    phi = apply_T(op, np.zeros(op.n))
    norm = sup_norm(op, phi)
    if norm < TINY_NORM:
        phi = np.ones(op.n)
        norm = 1.0
    return sigma * rho * phi / norm


def _state(op, u, rho, sigma):
    tu = apply_T(op, u)
    norm = sup_norm(op, tu)
    if norm < TINY_NORM:
        raise DegenerateOperatorError(
            f"||T u|| = {norm:.3g}; the sign conditions probably fail at rho={rho}"
        )
    lam = sigma * rho / norm
    residual = float(np.abs(u - lam * tu).max())
    defect = abs(sup_norm(op, u) - rho)
    return tu, norm, lam, residual, defect


def _pair(op, u, rho, sigma, iterations, method):
    _, _, lam, residual, defect = _state(op, u, rho, sigma)
    return EigenPair(lam, np.array(u), rho, residual, defect, iterations, method, sigma, op.nodes)


def _projective(op, u, rho, sigma, tol, max_iter, theta):
    best = None
    best_score = math.inf
    since_best = 0
    for it in range(max_iter + 1):
        tu, norm, lam, residual, defect = _state(op, u, rho, sigma)
        score = max(residual, defect)
        if score < best_score * 0.99:
            best_score, best, since_best = score, (u.copy(), it), 0
        else:
            since_best += 1
        if residual <= tol and defect <= tol:
            return u, it, True
        if since_best > STALL_WINDOW or it == max_iter:
            break
        u = (1.0 - theta) * u + theta * sigma * rho * tu / norm
    if best is None:
        return u, max_iter, False
    return best[0], best[1], False


def _newton(op, u, rho, sigma, tol, max_iter=NEWTON_ITERS):
    n = op.n
    lam = _state(op, u, rho, sigma)[2]
    active = int(np.argmax(np.abs(u)))
    switches = 0
    eps = np.sqrt(np.finfo(float).eps)

    def system(u, lam, window, idx):
        tu = apply_T(op, u)
        top = u - lam * tu
        c = _local_peak(op.nodes, u, idx, window) - rho
        return np.concatenate([top, [c]]), tu

    for it in range(1, max_iter + 1):
        idx = int(np.argmax(np.abs(u)))
        if idx != active:
            switches += 1
            active = idx
            if switches > MAX_INDEX_SWITCHES:
                raise NoConvergenceError(
                    "active index switched too often",
                    best=_pair(op, u, rho, sigma, it, "newton"),
                    diagnostics={"index_switches": switches},
                )
        window = _peak_window(op, u, idx)
        G, tu = system(u, lam, window, idx)
        if np.abs(G[:n]).max() <= tol and abs(G[n]) <= tol:
            return u, it
        J = np.zeros((n + 1, n + 1))
        for j in range(n):
            step = eps * max(1.0, abs(u[j]))
            up = u.copy()
            up[j] += step
            J[:n, j] = -lam * (apply_T(op, up) - tu) / step
            if j in window:
                J[n, j] = (_local_peak(op.nodes, up, idx, window) - rho - G[n]) / step
        J[:n, :n] += np.eye(n)
        J[:n, n] = -tu
        delta = np.linalg.solve(J, -G)
        merit = np.linalg.norm(G)
        alpha = 1.0
        for _ in range(30):
            cand_u = u + alpha * delta[:n]
            cand_lam = lam + alpha * delta[n]
            try:
                cand_G, _ = system(cand_u, cand_lam, window, idx)
            except NonFiniteError:
                cand_G = None
            if cand_G is not None and np.linalg.norm(cand_G) < merit:
                break
            alpha *= 0.5
        else:
            raise NoConvergenceError(
                "Newton line search failed",
                best=_pair(op, u, rho, sigma, it, "newton"),
                diagnostics={"merit": float(merit)},
            )
        u, lam = cand_u, cand_lam
        if np.sign(lam) != sigma:
            raise NoConvergenceError(
                "Newton iterate crossed to the other branch",
                best=_pair(op, u, rho, sigma, it, "newton"),
            )
    raise NoConvergenceError(
        "Newton iteration limit reached", best=_pair(op, u, rho, sigma, max_iter, "newton")
    )


def solve_pair(
    op: DiscreteOperator,
    rho: float,
    sign=1,
    init=None,
    tol: float = 1e-9,
    max_iter: int = PROJECTIVE_ITERS,
    theta: float = THETA,
) -> EigenPair:
    """Find ``(lam, u)`` with ``u = lam T u``, ``||u|| = rho``, ``sign(lam) = sign``.

    Starts from ``init`` (rescaled to norm ``rho``) or from the profile
    ``sign * rho * T0 / ||T0||``. Raises :class:`NoConvergenceError` with
    the best iterate attached when both stages fail.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    if not tol > 0:
        raise ValueError("tol must be positive")
    sigma = _sign(sign)
    if init is None:
        u = _initial_guess(op, rho, sigma)
    else:
        u = np.array(init, dtype=float)
        scale = sup_norm(op, u)
        u = u * (rho / scale) if scale > 0 else _initial_guess(op, rho, sigma)

    u, iters, ok = _projective(op, u, rho, sigma, tol, max_iter, theta)
    if ok:
        return _pair(op, u, rho, sigma, iters, "projective")
    log.info("projective iteration stalled after %d steps; switching to Newton", iters)
    try:
        u, newton_iters = _newton(op, u, rho, sigma, tol)
    except NoConvergenceError as exc:
        exc.diagnostics.setdefault("projective_iterations", iters)
        raise
    pair = _pair(op, u, rho, sigma, iters + newton_iters, "projective+newton")
    if pair.residual > tol or pair.norm_defect > tol or np.sign(pair.lam) != sigma:
        raise NoConvergenceError("no pair within tolerance", best=pair)
    return pair


@dataclass(frozen=True)
class PairVerification:
    residual: float
    residual_refined: float
    norm_defect: float
    norm_defect_refined: float
    a_rho: float | None
    margin: float | None
    contained: bool
    sign_ok: bool
    passed: bool


def _nystrom_refine(pair: EigenPair, op: DiscreteOperator, fine: DiscreteOperator):
    """Values of ``lam * T u`` on the nodes of ``fine``."""
    h = _functional(op, pair.u)
    fvals = op.spec.nonlinearity(op.nodes, pair.u, h)
    edges = (0,) + op.segment_starts[1:] + (op.n - 1,)
    splines = []
    for a, b in zip(edges[:-1], edges[1:]):
        splines.append((op.nodes[a], op.nodes[b], CubicSpline(op.nodes[a:b + 1], fvals[a:b + 1])))

    def f_interp(s):
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        for lo, hi, sp in splines:
            mask = (s >= lo) & (s <= hi)
            out[mask] = sp(s[mask])
        return out

    cfg = QuadratureConfig(abs_tol=1e-13)
    points = op.spec.all_breakpoints
    tu = np.array([kernel_apply(op.spec.kernel, f_interp, t, cfg, points) for t in fine.nodes])
    return pair.lam * tu


def verify_pair(pair: EigenPair, op: DiscreteOperator, report: ConditionReport | None = None,
                tol: float = 1e-9) -> PairVerification:
    """Re-check a pair on a rule with ``2n`` nodes and against ``a(rho)``.

    ``passed`` requires the refined residual and norm defect within
    ``10 * tol``, the requested sign, and containment when ``a(rho)`` exists.
    """
    fine = discretize(op.spec, 2 * op.n)
    u_fine = _nystrom_refine(pair, op, fine)
    tu_fine = apply_T(fine, u_fine)
    res_fine = float(np.abs(u_fine - pair.lam * tu_fine).max())
    defect_fine = abs(sup_norm(fine, u_fine) - pair.rho)
    a_rho = report.a_rho if report is not None else None
    margin = None if a_rho is None else a_rho - abs(pair.lam)
    contained = margin is None or margin >= -1e-8
    sign_ok = np.sign(pair.lam) == pair.sign
    passed = bool(
        contained and sign_ok and res_fine <= 10 * tol and defect_fine <= 10 * tol
    )
    return PairVerification(
        pair.residual, res_fine, pair.norm_defect, defect_fine, a_rho, margin,
        bool(contained), bool(sign_ok), passed,
    )


@dataclass
class SweepRow:
    rho: float
    report: ConditionReport | None = None
    plus: EigenPair | None = None
    minus: EigenPair | None = None
    errors: dict = field(default_factory=dict)

    @property
    def a_rho(self) -> float | None:
        return None if self.report is None else self.report.a_rho


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


def worker_count() -> int:
    """Worker cap from ``HEIG_THREADS`` (default: CPU count)."""
    env = os.environ.get("HEIG_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer HEIG_THREADS=%r", env)
    return os.cpu_count() or 1


def _sweep_row(spec, op, rho, tol, cfg, solve, inits):
    row = SweepRow(rho)
    try:
        row.report = check_conditions(build_bounds(spec, rho, cfg))
    except Exception as exc:
        row.errors["conditions"] = f"{type(exc).__name__}: {exc}"
    if not solve:
        return row
    for sigma, attr in ((1, "plus"), (-1, "minus")):
        try:
            pair = solve_pair(op, rho, sigma, init=inits.get(sigma), tol=tol)
            setattr(row, attr, pair)
        except Exception as exc:
            row.errors[attr] = f"{type(exc).__name__}: {exc}"
    return row


def sweep_rho(
    spec: ProblemSpec,
    rho_values: Sequence[float],
    n: int = 256,
    tol: float = 1e-9,
    solve: bool = True,
    continuation: bool = True,
    cfg: QuadratureConfig | None = None,
    workers: int | None = None,
) -> SweepResult:
    """Conditions, ``a(rho)`` and (optionally) both eigenpairs for each ``rho``.

    With ``continuation`` each solve is warm-started from the previous
    row's eigenfunctions and the rows run sequentially; without it rows
    are independent and run on up to ``workers`` threads. Failures are
    stored in ``row.errors`` and never abort the sweep.
    """
    rhos = [float(r) for r in rho_values]
    if any(r <= 0 for r in rhos):
        raise ValueError("rho values must be positive")
    if any(b < a for a, b in zip(rhos[:-1], rhos[1:])):
        raise ValueError("rho values must be sorted ascending")
    if not rhos:
        return SweepResult()
    op = discretize(spec, n) if solve else None
    if continuation and solve:
        rows = []
        inits: dict[int, np.ndarray] = {}
        for rho in rhos:
            row = _sweep_row(spec, op, rho, tol, cfg, solve, inits)
            inits = {}
            if row.plus is not None:
                inits[1] = row.plus.u
            if row.minus is not None:
                inits[-1] = row.minus.u
            rows.append(row)
        return SweepResult(rows)
    workers = workers or worker_count()
    if workers <= 1:
        return SweepResult([_sweep_row(spec, op, r, tol, cfg, solve, {}) for r in rhos])
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda r: _sweep_row(spec, op, r, tol, cfg, solve, {}), rhos))
    return SweepResult(rows)
