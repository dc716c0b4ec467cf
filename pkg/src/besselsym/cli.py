"""besselsym command line: solve, verify, kernel-table, sweep, selftest.

Exit codes: 0 ok, 1 a check failed, 2 config or file/schema error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__, selftest, verify
from .config import RunConfig, load_config, load_preset, preset_names
from .errors import (AmbiguousCenterError, BesselSymError, ConfigError, DomainError, NumericalError,
                     QuadratureError, SchemaError, ShapeMismatchError, SolverError)
from .grid import read_gridfunction, write_gridfunction
from .kernel import KernelParams, bessel_kernel_estimate, kernel_mass_estimate
from .potential import BRUTEFORCE_MAX_POINTS, compose_check, nonexpansive_check
from .solver import SolverTrace, residual, solve_ground_state

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
SOLUTION_FILE = "solution.txt"

log = logging.getLogger("besselsym")


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, sort_keys=True, indent=2, default=_plain) + "\n")


def write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def versions() -> dict:
    return {"besselsym": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


class Output:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def __call__(self, msg: str):
        if not self.quiet:
            print(msg)


def resolve_config(args) -> RunConfig:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = load_preset(args.preset)
    else:
        raise ConfigError("a run needs --config PATH or --preset NAME")
    return cfg


def out_dir(args, cfg: RunConfig | None, default: str) -> Path:
    path = Path(args.out or (cfg.output if cfg else default))
    path.mkdir(parents=True, exist_ok=True)
    return path


def seed_of(args, cfg: RunConfig | None) -> int:
    if args.seed is not None:
        return args.seed
    return cfg.seed if cfg else 0


def error_record(exc: Exception) -> dict:
    return {"error": type(exc).__name__, "message": str(exc)}


# --------------------------------------------------------------------------- solve


def cmd_solve(args, say) -> int:
    cfg = resolve_config(args)
    out = out_dir(args, cfg, "besselsym-out")
    manifest = {"config": cfg.to_dict(), "preset": cfg.name, "versions": versions()}
    try:
        u, trace = solve_ground_state(cfg.problem, cfg.grid, cfg.solver)
    except SolverError as exc:
        if exc.trace is not None:
            _write_trace(out / "trace.csv", exc.trace)
        record = error_record(exc)
        if exc.trace is not None:
            record["status"] = exc.trace.status.value if exc.trace.status else None
            record["iterations"] = len(exc.trace.records)
        write_json(out / "error.json", record)
        manifest.update(status=record.get("status"), error=record)
        write_json(out / "manifest.json", manifest)
        say(f"solve failed: {exc}")
        return EXIT_NUMERICAL
    res = residual(u, cfg.problem)
    p = cfg.problem
    write_gridfunction(out / SOLUTION_FILE, u, {"alpha": p.alpha, "beta": p.beta,
                                                "q_exponent": p.q_exponent, "preset": cfg.name})
    _write_trace(out / "trace.csv", trace)
    manifest.update(status=trace.status.value, iterations=len(trace.records), residual=res,
                    max_value=u.sup(), solution=SOLUTION_FILE)
    write_json(out / "manifest.json", manifest)
    say(f"converged in {len(trace.records)} iterations, residual {res:.3e}, max {u.sup():.10f}")
    say(f"wrote {out / SOLUTION_FILE}")
    return EXIT_OK


def _write_trace(path: Path, trace: SolverTrace) -> None:
    write_csv(path, SolverTrace.CSV_FIELDS, trace.rows())


# --------------------------------------------------------------------------- verify


def _load_solution(path, cfg: RunConfig):
    u, header = read_gridfunction(path)
    p = cfg.problem
    for key in ("alpha", "beta"):
        if key in header and float(header[key]) != getattr(p, key):
            raise SchemaError(f"{path}: {key}={header[key]} but the config says {getattr(p, key)}")
    if u.spec.dim != p.dim:
        raise SchemaError(f"{path}: dim={u.spec.dim} but the config says {p.dim}")
    if not u.is_positive():
        raise SchemaError(f"{path}: values must be strictly positive")
    return u


def run_checks(u, cfg: RunConfig, seed: int) -> dict:
    """Every check on one solution; each entry has a 'passed' flag."""
    p = cfg.problem
    th = cfg.thresholds
    axis = cfg.axis
    reports = {}

    res = residual(u, p)
    reports["residual"] = {"residual": res, "tolerance": cfg.solver.tol_residual,
                           "passed": res <= cfg.solver.tol_residual}

    try:
        sym = verify.check_symmetry(u, th)
        reports["symmetry"] = sym.to_dict()
        center = sym.center[axis]
    except AmbiguousCenterError as exc:
        reports["symmetry"] = {"passed": False, **error_record(exc),
                               "candidates": [list(c) for c in exc.candidates]}
        reports["moving_plane"] = {"passed": False, "skipped": "no unique centre"}
        center = None

    if center is not None:
        scan = verify.sigma_minus_scan(u, axis, thresholds=th, params=p, center=center)
        factors = [e.contraction_factor for e in scan.entries]
        monotone = bool(np.all(np.diff(factors) >= 0))
        reports["moving_plane"] = scan.to_dict()
        reports["contraction"] = {
            "c_hat": scan.c_hat, "threshold_lambda": scan.threshold_lambda,
            "max_factor": max(factors), "monotone": monotone,
            "passed": monotone and scan.threshold_lambda is not None and max(factors) > th.contraction_target}

        if u.spec.size <= BRUTEFORCE_MAX_POINTS:
            snapped = selftest.snap_to_half_grid(u.spec, center)
            rows = []
            for offset in (-4.0, -2.0, 0.0):
                lam = snapped + offset
                if not -u.spec.half_width <= lam < u.spec.half_width:
                    continue
                r = verify.lemma8_report(u, p.alpha, p.beta, lam, axis)
                rows.append({"lambda": lam, "residual": r.residual, "budget": r.budget,
                             "passed": r.within_budget and r.residual < th.lemma8_target})
            reports["reflection_identity"] = {"planes": rows, "target": th.lemma8_target,
                                 "passed": all(r["passed"] for r in rows)}
        else:
            reports["reflection_identity"] = {"skipped": f"{u.spec.size} points exceed {BRUTEFORCE_MAX_POINTS}",
                                 "passed": True}

    samples = []
    for lam in (-1.0, 0.3):
        s = verify.kernel_reflection_sample(p.alpha, p.dim, lam, axis, cfg.reflection_samples, seed)
        samples.append({"lambda": lam, "violations": s.violations, "samples": s.samples,
                        "max_violation": s.max_violation})
    reports["kernel_reflection"] = {"seed": seed, "configs": samples,
                                    "passed": all(s["violations"] == 0 for s in samples)}

    defect = compose_check(0.5 * p.alpha, 0.5 * p.alpha, u) / u.sup()
    ratio2 = nonexpansive_check(p.alpha, u, 2)
    reports["operator"] = {"compose_defect": defect, "l2_ratio": ratio2,
                           "passed": defect < 1e-12 and ratio2 <= 1.0}
    return reports


def cmd_verify(args, say) -> int:
    cfg = resolve_config(args)
    u = _load_solution(args.solution, cfg)
    seed = seed_of(args, cfg)
    out = out_dir(args, cfg, "besselsym-out")
    reports = run_checks(u, cfg, seed)
    for name, doc in reports.items():
        write_json(out / f"{name}.json", doc)
    mp = reports.get("moving_plane")
    if mp and "entries" in mp:
        write_csv(out / "moving_plane.csv", verify.MovingPlaneReport.CSV_FIELDS,
                  ((e["lam"], e["position"], e["sigma_minus_fraction"], e["max_violation"], e["points"],
                    e["contraction_factor"], "" if e["verdict"] is None else int(e["verdict"]))
                   for e in mp["entries"]))
    summary = {name: bool(doc["passed"]) for name, doc in reports.items()}
    ok = all(summary.values())
    write_json(out / "verify_summary.json", {"checks": summary, "passed": ok, "seed": seed,
                                             "solution": str(args.solution)})
    for name, passed in summary.items():
        say(f"[{'PASS' if passed else 'FAIL'}] {name}")
    return EXIT_OK if ok else EXIT_CHECK


# --------------------------------------------------------------------------- kernel table


def _radii(args) -> list[float]:
    if args.radii:
        try:
            return [float(r) for r in args.radii.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad --radii: {exc}") from exc
    return [float(r) for r in np.geomspace(args.r_min, args.r_max, args.count)]


def cmd_kernel_table(args, say) -> int:
    cfg = resolve_config(args) if (args.config or args.preset) else None
    alpha = args.alpha if args.alpha is not None else (cfg.problem.alpha if cfg else None)
    dim = args.dim if args.dim is not None else (cfg.problem.dim if cfg else None)
    if alpha is None or dim is None:
        raise ConfigError("kernel-table needs --alpha and --dim (or a config)")
    try:
        params = KernelParams(alpha, dim)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    radii = _radii(args)
    if any(r < 0 for r in radii) or (params.singular_at_origin and any(r == 0 for r in radii)):
        raise ConfigError("radii must be positive (zero only when alpha > dim)")
    rows = []
    failed = 0
    for r in radii:
        try:
            value, err = bessel_kernel_estimate(params, r)
            rows.append((alpha, dim, r, value, err))
        except QuadratureError as exc:
            failed += 1
            rows.append((alpha, dim, r, math.nan, f"failed: {exc}"))
    mass, mass_err = kernel_mass_estimate(params)
    rows.append((alpha, dim, "mass", mass, mass_err))
    if args.out:
        out = out_dir(args, cfg, "besselsym-out")
        write_csv(out / "kernel_table.csv", ("alpha", "dim", "radius", "value", "quad_error"), rows)
        say(f"wrote {out / 'kernel_table.csv'}")
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(("alpha", "dim", "radius", "value", "quad_error"))
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    if failed or abs(mass - 1.0) > 1e-6:
        log.error("%d quadrature failures, mass %.12g", failed, mass)
        return EXIT_NUMERICAL
    return EXIT_OK


# --------------------------------------------------------------------------- sweep


def cmd_sweep(args, say) -> int:
    cfg = resolve_config(args)
    if args.solution:
        u = _load_solution(args.solution, cfg)
    else:
        u, _ = solve_ground_state(cfg.problem, cfg.grid, cfg.solver)
    out = out_dir(args, cfg, "besselsym-out")
    lams = verify.half_grid_lambdas(u.spec, args.lambda_min, args.lambda_max)
    if not lams:
        raise ConfigError("the lambda range contains no half-grid plane")
    scan = verify.sigma_minus_scan(u, cfg.axis, lams, cfg.thresholds, cfg.problem)
    write_csv(out / "sweep.csv", verify.MovingPlaneReport.CSV_FIELDS, scan.rows())
    factors = [e.contraction_factor for e in scan.entries]
    doc = scan.to_dict()
    doc["contraction_monotone"] = bool(np.all(np.diff(factors) >= 0))
    write_json(out / "sweep.json", doc)
    say(f"{len(lams)} planes, centre {scan.center:.6g}, contraction threshold {scan.threshold_lambda}")
    ok = scan.passed and doc["contraction_monotone"]
    say(f"[{'PASS' if ok else 'FAIL'}] sweep")
    return EXIT_OK if ok else EXIT_CHECK


# --------------------------------------------------------------------------- selftest


def cmd_selftest(args, say) -> int:
    seed = args.seed if args.seed is not None else 0
    report = selftest.run_all(seed, echo=say)
    out = out_dir(args, None, "besselsym-selftest")
    write_json(out / "selftest.json", report)
    say(f"{'all criteria passed' if report['passed'] else 'some criteria FAILED'}; report in {out}")
    return EXIT_OK if report["passed"] else EXIT_CHECK


# --------------------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--preset", help=f"shipped preset ({', '.join(preset_names())})")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="seed for randomized checks")
    common.add_argument("--quiet", action="store_true", help="no progress output")

    parser = argparse.ArgumentParser(prog="besselsym", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("solve", parents=[common], help="compute a ground state")

    p = sub.add_parser("verify", parents=[common], help="run the symmetry checks on a solution")
    p.add_argument("solution", help="grid function file")

    p = sub.add_parser("kernel-table", parents=[common], help="tabulate g_alpha")
    p.add_argument("--alpha", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--radii", help="comma separated radii")
    p.add_argument("--r-min", type=float, default=0.1)
    p.add_argument("--r-max", type=float, default=10.0)
    p.add_argument("--count", type=int, default=25)

    p = sub.add_parser("sweep", parents=[common], help="moving-plane and contraction sweep")
    p.add_argument("--solution", help="grid function file (default: solve first)")
    p.add_argument("--lambda-min", type=float)
    p.add_argument("--lambda-max", type=float)

    sub.add_parser("selftest", parents=[common], help="run the acceptance suite")
    return parser


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "kernel-table": cmd_kernel_table,
            "sweep": cmd_sweep, "selftest": cmd_selftest}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    say = Output(args.quiet)
    try:
        return COMMANDS[args.command](args, say)
    except (ConfigError, SchemaError, ShapeMismatchError) as exc:
        print(json.dumps(error_record(exc), sort_keys=True), file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, BesselSymError) as exc:
        print(json.dumps(error_record(exc), sort_keys=True), file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
