"""Config-driven command line front end.

Usage::

    heig bounds|scan|solve|sweep --config FILE [--set section.key=value]... [--out DIR]

The config is an INI file with a ``[problem]`` and a ``[run]`` section::

    [problem]
    id = example1_mixed            ; or example2_dirichlet, or custom

    [run]
    rho = 0.1                      ; bounds / solve
    rho_lo = 0.005                 ; scan / sweep
    rho_hi = 0.4
    rho_count = 80
    n = 256
    quad_abs_tol = 1e-10
    solve_tol = 1e-9
    outputs = out
    emit_svg = true

A custom problem replaces ``id`` by its parts::

    [problem]
    id = custom
    kernel = green_mixed           ; registered name, or kernel_csv = table.csv
    kernel_kink = true
    g_csv = g.csv                  ; header t,g; cubic spline interpolation
    change_points = 2/3
    envelopes_csv = env.csv        ; header rho,ell_low,ell_up; monotone in rho
    ell = exp_ratio                ; optional (exp_ratio | one), needed to solve

Relative data paths are resolved against the config file's directory.
Exit codes: 0 success, 2 config error, 3 numerical failure, 4 solver
non-convergence.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from . import oracles
from .bounds import EnvelopeError, ProblemSpec, build_bounds
from .conditions import check_conditions, indicator_is_monotone, threshold_scan
from .eigensolver import (
    NoConvergenceError,
    discretize,
    solve_pair,
    sweep_rho,
    verify_pair,
    worker_count,
)
from .kernels import get_kernel, load_kernel_csv
from .problems import ExampleId, example_problem, exp_integral, exp_integral_bounds, exp_ratio
from .quadrature import QuadratureConfig
from .svg import Figure

log = logging.getLogger("heig")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_NOCONV = 0, 2, 3, 4
BOUNDS_POINTS = 1001
ELL_FAMILIES = ("exp_ratio", "one")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class RunConfig:
    problem: dict
    base_dir: Path
    rho: float | None = None
    rho_grid: tuple[float, float, int] | None = None
    n: int = 256
    quad_abs_tol: float = 1e-10
    solve_tol: float = 1e-9
    outputs: Path = Path("heig_out")
    emit_svg: bool = True
    sign: str = "both"
    threshold_intervals: list = field(default_factory=list)
    solve: bool = True
    continuation: bool = True

    @property
    def example(self) -> ExampleId | None:
        pid = self.problem.get("id", "").strip().lower()
        return None if pid == "custom" else ExampleId.parse(pid)

    @property
    def quad(self) -> QuadratureConfig:
        return QuadratureConfig(abs_tol=self.quad_abs_tol)

    def rho_values(self) -> np.ndarray:
        lo, hi, count = self.rho_grid
        if count == 0:
            return np.empty(0)
        if count == 1:
            return np.array([lo])
        return np.linspace(lo, hi, count)


# ---------------------------------------------------------------- config

def parse_fraction(text: str) -> float:
    """``"2/3"`` or ``"0.25"`` to float."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a number: {text!r}") from None


def _parse_intervals(text: str) -> list[tuple[float, float]]:
    out = []
    for item in filter(None, (x.strip() for x in text.split(","))):
        parts = item.split(":")
        if len(parts) != 2:
            raise ConfigError(f"interval {item!r} must look like lo:hi")
        lo, hi = (parse_fraction(p) for p in parts)
        if not 0.0 <= lo < hi <= 1.0:
            raise ConfigError(f"interval {item!r} must satisfy 0 <= lo < hi <= 1")
        out.append((lo, hi))
    return out


def _apply_overrides(parser: configparser.ConfigParser, overrides: Sequence[str]):
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        section, dot, name = key.strip().rpartition(".")
        if not dot:
            section = "problem" if parser.has_option("problem", name) else "run"
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, name, value.strip())


def load_config(path, overrides: Sequence[str] = (), out: str | None = None) -> RunConfig:
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with path.open(encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    _apply_overrides(parser, overrides)
    if not parser.has_section("problem"):
        raise ConfigError("config needs a [problem] section")
    run = parser["run"] if parser.has_section("run") else {}
    problem = dict(parser["problem"])
    if "id" not in problem:
        raise ConfigError("[problem] needs an id")

    def get(key, conv, default=None):
        if key not in run or str(run[key]).strip() == "":
            return default
        try:
            return conv(run[key])
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"[run] {key}: {exc}") from None

    def boolean(text):
        low = str(text).strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {text!r}")

    grid_keys = [k for k in ("rho_lo", "rho_hi", "rho_count") if k in run]
    grid = None
    if grid_keys:
        if len(grid_keys) != 3:
            raise ConfigError("a rho grid needs rho_lo, rho_hi and rho_count")
        grid = (get("rho_lo", parse_fraction), get("rho_hi", parse_fraction), get("rho_count", int))
        if grid[2] < 0:
            raise ConfigError("rho_count must be >= 0")
        if grid[2] > 0 and not 0 < grid[0] <= grid[1]:
            raise ConfigError("rho grid must satisfy 0 < rho_lo <= rho_hi")
    cfg = RunConfig(
        problem=problem,
        base_dir=path.parent,
        rho=get("rho", parse_fraction),
        rho_grid=grid,
        n=get("n", int, 256),
        quad_abs_tol=get("quad_abs_tol", float, 1e-10),
        solve_tol=get("solve_tol", float, 1e-9),
        outputs=Path(out) if out else Path(get("outputs", str, "heig_out")),
        emit_svg=get("emit_svg", boolean, True),
        sign=get("sign", str, "both"),
        threshold_intervals=get("threshold_intervals", _parse_intervals, []),
        solve=get("solve", boolean, True),
        continuation=get("continuation", boolean, True),
    )
    if cfg.rho is not None and cfg.rho_grid is not None:
        raise ConfigError("give either rho or a rho grid, not both")
    if cfg.n < 8:
        raise ConfigError("n must be >= 8")
    if not (cfg.quad_abs_tol > 0 and cfg.solve_tol > 0):
        raise ConfigError("tolerances must be positive")
    if cfg.rho is not None and not cfg.rho > 0:
        raise ConfigError("rho must be positive")
    try:
        cfg.example
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _need_rho(cfg: RunConfig) -> float:
    if cfg.rho is None:
        raise ConfigError("this command needs a single rho")
    return cfg.rho


def _need_grid(cfg: RunConfig) -> np.ndarray:
    if cfg.rho_grid is None:
        raise ConfigError("this command needs rho_lo, rho_hi and rho_count")
    return cfg.rho_values()


def _read_table(path: Path, header: Sequence[str]) -> np.ndarray:
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            head = [c.strip() for c in next(reader, [])]
            if head != list(header):
                raise ConfigError(f"{path}: header must be {','.join(header)}")
            rows = [[float(x) for x in row] for row in reader if row]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from None
    if len(rows) < 2:
        raise ConfigError(f"{path}: need at least two rows")
    data = np.array(rows)
    order = np.argsort(data[:, 0], kind="stable")
    data = data[order]
    if np.any(np.diff(data[:, 0]) <= 0):
        raise ConfigError(f"{path}: first column must have distinct values")
    return data


def _envelope_table(path: Path):
    data = _read_table(path, ("rho", "ell_low", "ell_up"))
    lo_i = PchipInterpolator(data[:, 0], data[:, 1], extrapolate=False)
    up_i = PchipInterpolator(data[:, 0], data[:, 2], extrapolate=False)
    r0, r1 = data[0, 0], data[-1, 0]

    def ell_bounds(rho):
        if not r0 <= rho <= r1:
            raise ConfigError(f"rho={rho} lies outside the envelope table [{r0}, {r1}]")
        return float(lo_i(rho)), float(up_i(rho))

    return ell_bounds


def _one(u, v):
    return np.ones(np.broadcast_shapes(np.shape(u), np.shape(v)))


def _warn_undeclared_sign_changes(g_data, change_points):
    t, v = g_data[:, 0], g_data[:, 1]
    for k in np.flatnonzero(v[:-1] * v[1:] < 0):
        if not any(t[k] <= c <= t[k + 1] for c in change_points):
            log.warning("g changes sign in [%g, %g] but no change point is declared there", t[k], t[k + 1])


def build_problem(cfg: RunConfig) -> ProblemSpec:
    ex = cfg.example
    if ex is not None:
        return example_problem(ex)
    p = cfg.problem

    def path_of(key):
        if key not in p:
            raise ConfigError(f"custom problem needs {key}")
        return (cfg.base_dir / p[key]).resolve()

    kink = p.get("kernel_kink", "false").strip().lower() in ("1", "true", "yes", "on")
    try:
        if "kernel_csv" in p:
            kernel = load_kernel_csv(path_of("kernel_csv"), kink=kink)
        elif "kernel" in p:
            kernel = get_kernel(p["kernel"].strip())
        else:
            raise ConfigError("custom problem needs kernel or kernel_csv")
    except (KeyError, OSError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"kernel: {exc}") from None
    for w in kernel.warnings:
        log.warning("kernel %s: %s", kernel.name, w)
    g_data = _read_table(path_of("g_csv"), ("t", "g"))
    if g_data[0, 0] > 0 or g_data[-1, 0] < 1:
        raise ConfigError("g samples must cover [0, 1]")
    # C2 spline: a C1 interpolant would force adaptive refinement at every sample
    g_interp = CubicSpline(g_data[:, 0], g_data[:, 1])

    def g(t):
        return g_interp(t)

    change_points = [parse_fraction(c) for c in p.get("change_points", "").split(",") if c.strip()]
    _warn_undeclared_sign_changes(g_data, change_points)
    ell_name = p.get("ell", "").strip().lower() or None
    if ell_name is not None and ell_name not in ELL_FAMILIES:
        raise ConfigError(f"ell must be one of {ELL_FAMILIES}")
    ell, H, H_bounds = None, None, None
    if ell_name == "exp_ratio":
        ell, H, H_bounds = exp_ratio, exp_integral, exp_integral_bounds
    elif ell_name == "one":
        ell = _one
    try:
        return ProblemSpec(
            kernel=kernel,
            form="separable",
            g=g,
            change_points=tuple(change_points),
            ell=ell,
            H=H,
            H_bounds=H_bounds,
            ell_bounds=_envelope_table(path_of("envelopes_csv")),
            name=p.get("name", "custom"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------- output

def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path: Path, header: Sequence[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(x) for x in row])
    return path


def write_json(path: Path, record: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------- commands

def cmd_bounds(cfg: RunConfig) -> list[Path]:
    rho = _need_rho(cfg)
    spec = build_problem(cfg)
    pair = build_bounds(spec, rho, cfg.quad)
    t = np.linspace(0.0, 1.0, BOUNDS_POINTS)
    low, up = np.asarray(pair.F_low(t)), np.asarray(pair.F_up(t))
    ex = cfg.example
    header = ["t", "F_low", "F_up"]
    cols = [t, low, up]
    if ex is not None:
        header += ["oracle_F_low", "oracle_F_up"]
        cols += [oracles.oracle_F_low(ex, rho, t), oracles.oracle_F_up(ex, rho, t)]
    out = [write_csv(cfg.outputs / "bounds.csv", header, zip(*cols))]
    if cfg.emit_svg:
        fig = Figure(f"Bound functions, {spec.name}, rho = {rho:g}", "t", "F")
        fig.line(t, low, "F_low").line(t, up, "F_up")
        fig.save(cfg.outputs / "bounds.svg")
        out.append(cfg.outputs / "bounds.svg")
    return out


def _refine_flips(spec, cfg, rhos, flags, interval, label):
    rows = []
    for k in range(len(flags) - 1):
        if flags[k] == flags[k + 1]:
            continue
        star = threshold_scan(spec, rhos[k], rhos[k + 1], "5b", cfg.quad, interval)
        rows.append((label, interval, star))
    return rows


def _oracle_star(ex, interval):
    if ex is None:
        return None
    kinds = {(0.0, 1.0): "global", (2.0 / 3.0, 1.0): "interval_tail", (0.0, 2.0 / 3.0): "interval_head"}
    for key, kind in kinds.items():
        if np.allclose(interval, key, rtol=0, atol=1e-12):
            try:
                return oracles.oracle_threshold(ex, kind)
            except ValueError:
                return None
    return None


def cmd_scan(cfg: RunConfig) -> list[Path]:
    rhos = _need_grid(cfg)
    spec = build_problem(cfg) if rhos.size else None
    reports = [check_conditions(build_bounds(spec, r, cfg.quad)) for r in rhos]
    rows = [
        (r.rho, r.F_low_max, r.F_low_argmax, r.holds_5b, r.holds_5a, r.a_rho, r.a_rho_5b, r.a_rho_5a)
        for r in reports
    ]
    header = ["rho", "F_low_max", "t_rho", "holds_5b", "holds_5a", "a_rho", "a_rho_5b", "a_rho_5a"]
    out = [write_csv(cfg.outputs / "scan.csv", header, rows)]

    flips = []
    if rhos.size >= 2:
        targets = [("global", (0.0, 1.0), [r.holds_5b for r in reports])]
        for iv in cfg.threshold_intervals:
            flags = [check_conditions(build_bounds(spec, r, cfg.quad), iv).holds_5b for r in rhos]
            targets.append(("interval", iv, flags))
        for label, iv, flags in targets:
            if not indicator_is_monotone(flags):
                log.warning("indicator on [%g, %g] flips more than once on the coarse grid; "
                            "each flip is refined separately", *iv)
            flips += _refine_flips(spec, cfg, rhos, flags, iv, label)
    ex = cfg.example
    thr_rows = [(label, iv[0], iv[1], star, _oracle_star(ex, iv)) for label, iv, star in flips]
    out.append(write_csv(cfg.outputs / "thresholds.csv",
                         ["scope", "t_lo", "t_hi", "rho_star", "oracle_rho_star"], thr_rows))
    if cfg.emit_svg and rhos.size:
        fig = Figure(f"Maximum of F_low, {spec.name}", "rho", "max F_low")
        fig.line(rhos, [r.F_low_max for r in reports], "max F_low")
        for _, _, star, *_ in thr_rows:
            fig.vline(star)
        fig.save(cfg.outputs / "scan.svg")
        out.append(cfg.outputs / "scan.svg")
    return out


def _signs(sign: str) -> list[int]:
    table = {"+": [1], "plus": [1], "-": [-1], "minus": [-1], "both": [1, -1]}
    key = str(sign).strip().lower()
    if key not in table:
        raise ConfigError(f"sign must be one of {sorted(table)}")
    return table[key]


def cmd_solve(cfg: RunConfig, sign: str | None = None) -> list[Path]:
    rho = _need_rho(cfg)
    signs = _signs(sign or cfg.sign)
    spec = build_problem(cfg)
    if spec.form == "separable" and spec.ell is None:
        raise ConfigError("solve needs [problem] ell for a custom problem")
    report = check_conditions(build_bounds(spec, rho, cfg.quad))
    if report.a_rho is None:
        log.warning("neither sign condition holds at rho=%g; solving anyway without a band", rho)
    op = discretize(spec, cfg.n)
    out = []
    failures = []
    for sigma in signs:
        tag = "plus" if sigma > 0 else "minus"
        try:
            pair = solve_pair(op, rho, sigma, tol=cfg.solve_tol)
        except NoConvergenceError as exc:
            best = exc.best
            diag = {
                "message": str(exc),
                "rho": rho,
                "sign": tag,
                "n": cfg.n,
                "diagnostics": {k: v for k, v in exc.diagnostics.items() if isinstance(v, (int, float, str))},
                "best_lambda": None if best is None else best.lam,
                "best_residual": None if best is None else best.residual,
                "best_norm_defect": None if best is None else best.norm_defect,
            }
            out.append(write_json(cfg.outputs / f"pair_{tag}_diagnostics.json", diag))
            failures.append(exc)
            continue
        check = verify_pair(pair, op, report, cfg.solve_tol)
        out.append(write_csv(cfg.outputs / f"pair_{tag}.csv", ["t", "u"], zip(pair.nodes, pair.u)))
        record = {
            "rho": rho,
            "sign": tag,
            "n": cfg.n,
            "lambda": pair.lam,
            "residual": pair.residual,
            "norm_defect": pair.norm_defect,
            "residual_refined": check.residual_refined,
            "norm_defect_refined": check.norm_defect_refined,
            "a_rho": report.a_rho,
            "contained": None if report.a_rho is None else check.contained,
            "iterations": pair.iterations,
            "method": pair.method,
        }
        out.append(write_json(cfg.outputs / f"pair_{tag}.json", record))
    if failures:
        raise failures[0]
    return out


def cmd_sweep(cfg: RunConfig) -> tuple[list[Path], bool]:
    """Returns the written files and whether at least one row succeeded."""
    rhos = _need_grid(cfg)
    header = ["rho", "a_rho", "holds_5b", "holds_5a", "lambda_plus", "lambda_minus",
              "residual_plus", "residual_minus", "error"]
    if rhos.size == 0:
        return [write_csv(cfg.outputs / "sweep.csv", header, [])], True
    spec = build_problem(cfg)
    solve = cfg.solve
    if solve and spec.form == "separable" and spec.ell is None:
        raise ConfigError("sweep with solve = true needs [problem] ell for a custom problem")
    result = sweep_rho(spec, rhos, n=cfg.n, tol=cfg.solve_tol, solve=solve,
                       continuation=cfg.continuation, cfg=cfg.quad, workers=worker_count())
    rows, ok = [], False
    for row in result:
        rep = row.report
        errors = "; ".join(f"{k}: {v}" for k, v in sorted(row.errors.items()))
        ok = ok or not row.errors
        rows.append((
            row.rho, row.a_rho,
            None if rep is None else rep.holds_5b,
            None if rep is None else rep.holds_5a,
            None if row.plus is None else row.plus.lam,
            None if row.minus is None else row.minus.lam,
            None if row.plus is None else row.plus.residual,
            None if row.minus is None else row.minus.residual,
            errors,
        ))
    out = [write_csv(cfg.outputs / "sweep.csv", header, rows)]
    if cfg.emit_svg:
        a = np.array([np.nan if r.a_rho is None else r.a_rho for r in result])
        fig = Figure(f"Localization region, {spec.name}", "rho", "lambda")
        fig.band(rhos, -a, a, label="[-a(rho), a(rho)]")
        if solve:
            fig.line(rhos, [np.nan if r.plus is None else r.plus.lam for r in result], "lambda+")
            fig.line(rhos, [np.nan if r.minus is None else r.minus.lam for r in result], "lambda-")
        fig.save(cfg.outputs / "region.svg")
        out.append(cfg.outputs / "region.svg")
    for row in result:
        if row.errors:
            log.warning("rho=%g: %s", row.rho, "; ".join(f"{k}: {v}" for k, v in row.errors.items()))
    return out, ok


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heig", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("bounds", "tabulate F_low and F_up at a single rho"),
        ("scan", "scan the sign conditions over a rho grid and locate thresholds"),
        ("solve", "solve for eigenpairs at a single rho"),
        ("sweep", "localization bands and eigenpairs over a rho grid"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="INI run configuration")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value (section.key=value); repeatable")
        p.add_argument("--out", help="output directory (overrides [run] outputs)")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "solve":
            p.add_argument("--sign", choices=["+", "-", "plus", "minus", "both"],
                           help="branch to solve (default: [run] sign, else both)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="heig: %(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config, args.set, args.out)
        if args.command == "bounds":
            files = cmd_bounds(cfg)
            code = EXIT_OK
        elif args.command == "scan":
            files = cmd_scan(cfg)
            code = EXIT_OK
        elif args.command == "solve":
            files = cmd_solve(cfg, args.sign)
            code = EXIT_OK
        else:
            files, ok = cmd_sweep(cfg)
            code = EXIT_OK if ok else EXIT_NUMERIC
            if not ok:
                log.error("no sweep row succeeded")
    except NoConvergenceError as exc:
        log.error("solver did not converge: %s", exc)
        return EXIT_NOCONV
    except (ConfigError, EnvelopeError) as exc:
        log.error("config: %s", exc)
        return EXIT_CONFIG
    except ArithmeticError as exc:
        log.error("numerical failure: %s: %s", type(exc).__name__, exc)
        return EXIT_NUMERIC
    except ValueError as exc:
        log.error("config: %s", exc)
        return EXIT_CONFIG
    for f in files:
        print(f)
    return code


if __name__ == "__main__":
    sys.exit(main())
