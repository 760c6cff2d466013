"""Command-line front end.

Exit status: 0 success, 2 configuration error, 3 solver failure,
4 certification failure (identity check not passed).

Every subcommand accepts ``--config FILE`` with ``key = value`` lines
(keys spelled like the long flags, dashes or underscores); flags given on
the command line win.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

from . import io as sio

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CERT = 0, 2, 3, 4
CERT_TOL = 1e-6
PLANAR_TOL = 1e-2

log = logging.getLogger("skewcs")


class ConfigError(ValueError):
    pass


def _pair(s: str) -> tuple[float, float]:
    parts = s.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {s!r}")
    return float(parts[0]), float(parts[1])


def _points(s: str) -> tuple:
    """'x,y;x,y' -> ((x, y), (x, y)); empty string -> ()."""
    s = s.strip()
    if not s:
        return ()
    out = []
    for item in s.split(";"):
        out.append(_pair(item))
    return tuple(out)


def _positive(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {s}")
    return v


def _add_radial(p, targets=True):
    p.add_argument("--n1", type=int)
    p.add_argument("--n2", type=int)
    p.add_argument("--eps", type=float, default=1.0)
    if targets:
        p.add_argument("--beta1", type=float)
        p.add_argument("--beta2", type=float)


def _add_planar(p):
    p.add_argument("--n1", type=int)
    p.add_argument("--n2", type=int)
    p.add_argument("--points1", type=_points, default=())
    p.add_argument("--points2", type=_points, default=())
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--beta1", type=float)
    p.add_argument("--beta2", type=float)
    p.add_argument("--radius", type=_positive, default=40.0)
    p.add_argument("--h", type=_positive, default=0.2, help="grid spacing")
    p.add_argument("--steps", type=int, default=10, help="uniform continuation steps in eps")
    p.add_argument("--newton-tol", type=_positive, default=1e-10)
    p.add_argument("--radial-tol", type=_positive, default=1e-9)
    p.add_argument("--cert-tol", type=_positive, default=PLANAR_TOL)
    p.add_argument("--no-grid-check", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="skewcs", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="mode", required=True)

    p = sub.add_parser("solve-radial", help="shoot for a prescribed decay pair")
    _add_radial(p)
    p.add_argument("--tol", type=_positive, default=1e-9)
    p.add_argument("--integ-tol", type=_positive, default=1e-11)
    p.add_argument("--a1", type=float, help="initial iterate (with --a2)")
    p.add_argument("--a2", type=float)
    p.add_argument("--atlas", type=Path, help="atlas CSV for the initial iterate")
    p.add_argument("--symmetric", action="store_true")
    p.add_argument("--cert-tol", type=_positive, default=CERT_TOL)
    p.add_argument("--out", type=Path, default=Path("radial_solution.json"))
    p.add_argument("--report", type=Path, help="identity report path (default: next to --out)")

    p = sub.add_parser("shoot", help="classify one trajectory")
    _add_radial(p, targets=False)
    p.add_argument("--a1", type=float)
    p.add_argument("--a2", type=float)
    p.add_argument("--tol", type=_positive, default=1e-10)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("scan", help="outcome atlas on a grid of shooting constants")
    _add_radial(p, targets=False)
    p.add_argument("--a1-range", type=_pair)
    p.add_argument("--a2-range", type=_pair)
    p.add_argument("--steps", type=int, default=21)
    p.add_argument("--tol", type=_positive, default=1e-9)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("atlas.csv"))

    p = sub.add_parser("solve-planar", help="planar solution at the target eps by continuation")
    _add_planar(p)
    p.add_argument("--out", type=Path, default=Path("planar_solution.json"))

    p = sub.add_parser("continue", help="full eps path with per-step reports")
    _add_planar(p)
    p.add_argument("--out-dir", type=Path, default=Path("path"))

    p = sub.add_parser("verify", help="re-check a stored solution")
    p.add_argument("solution", type=Path)
    p.add_argument("--cert-tol", type=_positive)
    p.add_argument("--recompute", action=argparse.BooleanOptionalAction, default=True,
                   help="re-integrate radial solutions from their shooting constants")

    p = sub.add_parser("exclusion", help="admissibility and exclusion-curve check (exact for rationals)")
    p.add_argument("--n1", type=int)
    p.add_argument("--n2", type=int)
    p.add_argument("--beta1", type=str)
    p.add_argument("--beta2", type=str)
    p.add_argument("--out", type=Path)

    for sp_ in sub.choices.values():
        sp_.add_argument("--config", type=Path, help="key = value file; flags override")
    return ap


def read_kv(path: Path) -> dict:
    out = {}
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _apply_config(ap: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    args = ap.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    kv = read_kv(args.config)
    sub = ap._subparsers._group_actions[0].choices[args.mode]  # noqa: SLF001
    actions = {a.dest: a for a in sub._actions}  # noqa: SLF001
    defaults = {}
    for k, v in kv.items():
        if k not in actions or k in ("config", "help"):
            raise ConfigError(f"unknown config key {k!r} for {args.mode}")
        a = actions[k]
        if a.const is not None or isinstance(a, (argparse._StoreTrueAction, argparse.BooleanOptionalAction)):  # noqa: SLF001
            defaults[k] = v.lower() in ("1", "true", "yes", "on")
        else:
            try:
                defaults[k] = a.type(v) if a.type else v
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {k}: {v!r} ({exc})") from exc
    sub.set_defaults(**defaults)
    return ap.parse_args(argv)


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise ConfigError(f"{args.mode}: missing {', '.join('--' + m.replace('_', '-') for m in missing)}")


def _config_dict(args) -> dict:
    d = {}
    for k, v in vars(args).items():
        if k in ("verbose",):
            continue
        d[k] = str(v) if isinstance(v, Path) else v
    return d


def _emit(obj: dict, path: Optional[Path] = None):
    text = sio.dumps(obj)
    if path is not None:
        Path(path).write_text(text)
    print(text if path is None else json.dumps({"written": str(path)}))


# ---------------------------------------------------------------------------
# modes


def cmd_solve_radial(args) -> int:
    from .identities import pohozaev_report
    from .radial import RadialParams, ShootingParams
    from .shooting import DecayPair, ShootingFailure, atlas_from_csv, solve_for_target

    _require(args, "n1", "n2", "beta1", "beta2")
    params = RadialParams(args.n1, args.n2, args.eps, 1.0)
    target = DecayPair(args.beta1, args.beta2)
    guess = None
    if (args.a1 is None) != (args.a2 is None):
        raise ConfigError("--a1 and --a2 go together")
    if args.a1 is not None:
        guess = ShootingParams(args.a1, args.a2)
    atlas = atlas_from_csv(args.atlas.read_text()) if args.atlas else None
    try:
        shoot, sol = solve_for_target(target, params, tol=args.tol, integ_tol=args.integ_tol, guess=guess,
                                      atlas=atlas, symmetric=args.symmetric)
    except ShootingFailure as exc:
        _emit({"schema": "skewcs.failure/1", "error": str(exc),
               "best": None if exc.best is None else asdict(exc.best), "history": exc.history})
        return EXIT_SOLVER
    report = pohozaev_report(sol)
    cfg = _config_dict(args)
    sio.save_radial(sol, args.out, cfg)
    rpath = args.report or args.out.with_name(args.out.stem + "_report.json")
    rd = report.to_dict()
    rd["config"] = cfg
    rd["cert_tol"] = args.cert_tol
    rd["passed"] = report.passes(args.cert_tol)
    rpath.write_text(sio.dumps(rd))
    summary = {"schema": "skewcs.summary/1", "solution": str(args.out), "report": str(rpath),
               "shoot": asdict(shoot), "outcome": [sol.outcome.beta1, sol.outcome.beta2],
               "admissible": target.admissible(args.n1, args.n2),
               "rel_errors": report.rel_errors, "passed": rd["passed"]}
    print(sio.dumps(summary))
    return EXIT_OK if rd["passed"] else EXIT_CERT


def cmd_shoot(args) -> int:
    from .radial import NumericalFailure, RadialParams, ShootingParams
    from .shooting import shoot

    _require(args, "n1", "n2", "a1", "a2")
    params = RadialParams(args.n1, args.n2, args.eps, 1.0)
    outcome, sol = shoot(ShootingParams(args.a1, args.a2), params, args.tol)
    if args.out:
        sio.save_radial(sol, args.out, _config_dict(args))
    _emit({"schema": "skewcs.shoot/1", "outcome": outcome.label, "detail": asdict(outcome),
           "stop": sol.stop, "beta_slope": list(sol.beta_slope), "beta_flux": list(sol.beta_flux)})
    return EXIT_SOLVER if isinstance(outcome, NumericalFailure) else EXIT_OK


def cmd_scan(args) -> int:
    from .radial import RadialParams
    from .shooting import atlas_to_csv, scan_region

    _require(args, "n1", "n2", "a1_range", "a2_range")
    if args.steps < 2:
        raise ConfigError("--steps must be at least 2")
    params = RadialParams(args.n1, args.n2, args.eps, 1.0)
    cells = scan_region(args.a1_range, args.a2_range, args.steps, params, args.tol, workers=args.workers)
    args.out.write_text(atlas_to_csv(cells))
    counts: dict = {}
    for c in cells:
        counts[c.outcome.label] = counts.get(c.outcome.label, 0) + 1
    _emit({"schema": "skewcs.scan/1", "atlas": str(args.out), "cells": len(cells), "counts": counts})
    return EXIT_OK


def _planar_path(args):
    from .planar.config import VortexConfig
    from .planar.grid import DiskGrid
    from .planar.solver import continue_in_eps
    from .radial import RadialParams
    from .shooting import DecayPair, solve_for_target

    _require(args, "n1", "n2", "beta1", "beta2")
    config = VortexConfig(args.n1, args.n2, args.points1, args.points2, args.eps)
    decay = DecayPair(args.beta1, args.beta2)
    _, seed = solve_for_target(decay, RadialParams(args.n1, args.n2, 1.0, 1.0), tol=args.radial_tol)
    n = 2 * int(math.ceil(args.radius / args.h)) + 1
    if not args.no_grid_check and (n - 1) % 4:
        n += 2  # keep a coarse companion grid sharing every other node
    grid = DiskGrid(args.radius, n)
    return continue_in_eps(seed, config, decay, args.steps, grid=grid, tol=args.newton_tol,
                           grid_check=not args.no_grid_check)


def _step_summary(st) -> dict:
    from .planar.solver import newton_order

    d = {"eps": st.eps, "residual_norm": st.solution.residual_norm,
         "newton_history": list(st.solution.newton_history),
         "newton_order": newton_order(st.solution.newton_history),
         "max_abs_v": st.solution.max_abs_v,
         "report": st.report.to_dict() if st.report else None}
    if st.grid is not None:
        d["grid_estimate"] = st.grid.to_dict()
    return d


def cmd_solve_planar(args) -> int:
    from .planar.solver import PlanarNewtonFailure
    from .shooting import ShootingFailure

    try:
        path = _planar_path(args)
    except (PlanarNewtonFailure, ShootingFailure) as exc:
        _emit({"schema": "skewcs.failure/1", "error": str(exc), "eps": getattr(exc, "eps", None)})
        return EXIT_SOLVER
    last = path[-1]
    cfg = _config_dict(args)
    sio.save_planar(last.solution, args.out, cfg)
    summary = _step_summary(last)
    summary.update(schema="skewcs.planar-summary/1", solution=str(args.out), steps=len(path) - 1,
                   cert_tol=args.cert_tol, passed=last.report.passes(args.cert_tol))
    print(sio.dumps(summary))
    return EXIT_OK if summary["passed"] else EXIT_CERT


def cmd_continue(args) -> int:
    from .planar.solver import PlanarNewtonFailure
    from .shooting import ShootingFailure

    try:
        path = _planar_path(args)
    except (PlanarNewtonFailure, ShootingFailure) as exc:
        _emit({"schema": "skewcs.failure/1", "error": str(exc), "eps": getattr(exc, "eps", None)})
        return EXIT_SOLVER
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    rows = ["step,eps,residual_norm,newton_order,max_abs_v,max_rel_err,grad_corr"]
    steps = []
    for k, st in enumerate(path):
        sio.save_planar(st.solution, out / f"step{k:03d}.json", _config_dict(args))
        s = _step_summary(st)
        steps.append(s)
        rows.append(f"{k},{st.eps!r},{st.solution.residual_norm!r},{s['newton_order']!r},"
                    f"{st.solution.max_abs_v!r},{st.report.max_rel_err!r},{st.report.grad_corr!r}")
    (out / "path.csv").write_text("\n".join(rows) + "\n")
    passed = all(st.report.passes(args.cert_tol) for st in path)
    (out / "path.json").write_text(sio.dumps({"schema": "skewcs.path/1", "config": _config_dict(args),
                                             "version": sio.code_version(), "steps": steps,
                                             "passed": passed}))
    print(json.dumps({"path": str(out), "steps": len(path) - 1, "passed": passed}))
    return EXIT_OK if passed else EXIT_CERT


def cmd_verify(args) -> int:
    from .identities import UncertifiedSolution, pohozaev_planar_report, pohozaev_report
    from .radial import solve_radial

    d = sio.load_json(args.solution)
    schema = d.get("schema")
    if schema == sio.RADIAL_SCHEMA:
        sol = sio.radial_from_dict(d)
        tol = args.cert_tol or CERT_TOL
        try:
            rep = pohozaev_report(sol)
        except UncertifiedSolution as exc:
            _emit({"schema": "skewcs.verify/1", "passed": False, "error": str(exc)})
            return EXIT_CERT
        ok = rep.passes(tol)
        out = {"schema": "skewcs.verify/1", "report": rep.to_dict(), "identities_passed": ok}
        if args.recompute and sol.shoot is not None:
            fresh = solve_radial(sol.params, sol.shoot, tol=sol.tol)
            drift = max(abs(a - b) / max(abs(b), 1.0)
                        for a, b in zip(sol.quad.as_array(), fresh.quad.as_array()))
            out["recompute_drift"] = drift
            out["recompute_passed"] = drift < tol
            ok = ok and drift < tol
        out["passed"] = ok
        _emit(out)
        return EXIT_OK if ok else EXIT_CERT
    if schema == sio.PLANAR_SCHEMA:
        from .planar.solver import assemble_residual

        sol = sio.load_planar(args.solution)
        tol = args.cert_tol or PLANAR_TOL
        r = assemble_residual(sol.v1, sol.v2, sol.background(), sol.grid).norm
        rep = pohozaev_planar_report(sol, require_converged=False)
        ok = rep.passes(tol) and r <= 10 * max(sol.meta.get("newton_tol", 1e-10), sol.residual_norm)
        _emit({"schema": "skewcs.verify/1", "report": rep.to_dict(), "residual_norm": r, "passed": ok})
        return EXIT_OK if ok else EXIT_CERT
    raise ConfigError(f"{args.solution}: unknown schema {schema!r}")


def cmd_exclusion(args) -> int:
    from .diagnostics import exclusion_check, parse_number

    _require(args, "n1", "n2", "beta1", "beta2")
    try:
        b1, b2 = parse_number(args.beta1), parse_number(args.beta2)
        rep = exclusion_check(b1, b2, args.n1, args.n2)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from exc
    _emit(rep.to_dict(), args.out)
    return EXIT_OK


COMMANDS = {
    "solve-radial": cmd_solve_radial,
    "shoot": cmd_shoot,
    "scan": cmd_scan,
    "solve-planar": cmd_solve_planar,
    "continue": cmd_continue,
    "verify": cmd_verify,
    "exclusion": cmd_exclusion,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(ap, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.mode](args)
    except ConfigError as exc:
        print(f"skewcs: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # argparse
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONFIG
    except (ValueError, TypeError) as exc:
        print(f"skewcs: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
