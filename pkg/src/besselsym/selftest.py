"""The acceptance suite as plain functions, shared by ``besselsym selftest`` and pytest.

Each criterion returns a :class:`CriterionResult`.  Results carry only numbers derived
from the computation (no timings), so two runs with one seed give identical reports.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernel, potential, verify
from .config import RunConfig, load_preset
from .grid import GridFunction, GridSpec
from .solver import SolverConfig, residual, solve_ground_state

RADIAL_PRESETS = ("sech1d", "frac1d", "iso2d")
SCAN_PRESETS = ("sech1d", "frac1d", "iso2d", "small-oracle")


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number:2d}: {self.name}"


class Context:
    """Solutions shared between criteria so each preset is solved once per run."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._solutions = {}

    def config(self, name: str) -> RunConfig:
        return load_preset(name)

    def solution(self, name: str, init: str = "gaussian") -> GridFunction:
        key = (name, init)
        if key not in self._solutions:
            cfg = self.config(name)
            spec = cfg.grid
            solver_cfg = cfg.solver
            initial = None
            if init == "shifted":
                center = (3.0,) + (-2.0,) * (spec.dim - 1)
                solver_cfg = SolverConfig(init_profile="shifted_gaussian", init_center=center)
            elif init == "two_bumps":
                r_a = spec.radius_squared((1.5,) + (0.5,) * (spec.dim - 1))
                r_b = spec.radius_squared((-2.0,) + (0.0,) * (spec.dim - 1))
                initial = GridFunction(spec, np.exp(-0.5 * r_a) + 0.4 * np.exp(-r_b / 4.5))
            self._solutions[key] = solve_ground_state(cfg.problem, spec, solver_cfg, initial)[0]
        return self._solutions[key]


def _f(x) -> float:
    return float(x)


def criterion_1(ctx: Context) -> CriterionResult:
    masses = {}
    for alpha in (0.5, 1.0, 2.0, 3.7):
        for dim in (1, 2, 3):
            masses[f"alpha={alpha},n={dim}"] = kernel.kernel_mass(kernel.KernelParams(alpha, dim))
    worst = max(abs(m - 1.0) for m in masses.values())
    return CriterionResult(1, "kernel normalization", worst <= 1e-6,
                           {"max_abs_mass_error": worst, "tolerance": 1e-6})


def criterion_2(ctx: Context) -> CriterionResult:
    radii = np.geomspace(0.1, 10.0, 41)
    one = kernel.KernelParams(2.0, 1)
    three = kernel.KernelParams(2.0, 3)
    err1 = max(abs(kernel.bessel_kernel(one, r) / (0.5 * math.exp(-r)) - 1) for r in radii)
    err3 = max(abs(kernel.bessel_kernel(three, r) / (math.exp(-r) / (4 * math.pi * r)) - 1)
               for r in radii)
    return CriterionResult(2, "closed-form kernels", max(err1, err3) <= 1e-8,
                           {"max_rel_error_n1": err1, "max_rel_error_n3": err3, "tolerance": 1e-8})


def _random_inputs(seed: int):
    rng = np.random.default_rng(seed)
    specs = (GridSpec(1, 16.0, 256), GridSpec(2, 8.0, 64), GridSpec(3, 4.0, 16))
    return [GridFunction(s, rng.random(s.shape)) for s in specs]


def criterion_3(ctx: Context) -> CriterionResult:
    pairs = ((1.0, 1.0), (0.7, 1.3), (2.0, 2.0), (0.0, 1.5))
    worst = 0.0
    for f in _random_inputs(ctx.seed):
        for a, b in pairs:
            worst = max(worst, potential.compose_check(a, b, f) / f.sup())
            worst = max(worst, potential.compose_check(b, a, f) / f.sup())
    return CriterionResult(3, "semigroup law", worst < 1e-12,
                           {"max_scaled_defect": worst, "tolerance": 1e-12})


def _smooth_inputs():
    spec = GridSpec(1, 16.0, 256)
    x = spec.coords()
    yield GridFunction(spec, np.exp(-0.5 * x * x))
    yield GridFunction(spec, 1.0 / np.cosh(x - 1.0) + 0.5 / np.cosh(2.0 * (x + 3.0)))
    spec2 = GridSpec(2, 8.0, 64)
    yield GridFunction(spec2, np.exp(-0.5 * spec2.radius_squared((0.5, -1.0))))


def criterion_4(ctx: Context) -> CriterionResult:
    alphas = (0.5, 1.5, 2.0, 3.0)
    l2 = max(potential.nonexpansive_check(a, f, 2) for f in _random_inputs(ctx.seed) for a in alphas)
    l2 = max(l2, max(potential.nonexpansive_check(a, f, 2) for f in _smooth_inputs() for a in alphas))
    l1 = max(potential.nonexpansive_check(a, f, 1) for f in _smooth_inputs() for a in alphas)
    linf = max(potential.nonexpansive_check(a, f, math.inf) for f in _smooth_inputs() for a in alphas)
    ok = l2 <= 1.0 and l1 <= 1 + 1e-6 and linf <= 1 + 1e-6
    return CriterionResult(4, "nonexpansiveness", ok,
                           {"max_ratio_p2": l2, "max_ratio_p1": l1, "max_ratio_pinf": linf})


def criterion_5(ctx: Context) -> CriterionResult:
    cfg = ctx.config("sech1d")
    u = ctx.solution("sech1d")
    res = residual(u, cfg.problem)
    center = verify.find_center(u)[0]
    x = cfg.grid.coords()
    dist = _f(np.max(np.abs(u.values - math.sqrt(2) / np.cosh(x - center))))
    peak_err = abs(u.sup() - math.sqrt(2))
    ok = res <= cfg.solver.tol_residual and peak_err <= 1e-3 and dist <= 1e-3
    return CriterionResult(5, "ground-state benchmark", ok,
                           {"residual": res, "max_value": u.sup(), "sup_distance_to_sech": dist})


def criterion_6(ctx: Context) -> CriterionResult:
    metrics = {}
    ok = True
    for name in RADIAL_PRESETS:
        thresholds = ctx.config(name).thresholds
        for init in ("gaussian", "shifted", "two_bumps"):
            rep = verify.check_symmetry(ctx.solution(name, init), thresholds)
            metrics[f"{name}/{init}"] = {"asymmetry": rep.asymmetry,
                                         "monotonicity_violation": rep.monotonicity_violation,
                                         "center": rep.center, "passed": rep.passed}
            ok = ok and rep.passed
    return CriterionResult(6, "radial symmetry suite", ok, metrics)


def criterion_7(ctx: Context) -> CriterionResult:
    metrics = {}
    ok = True
    for name in SCAN_PRESETS:
        cfg = ctx.config(name)
        rep = verify.sigma_minus_scan(ctx.solution(name), cfg.axis, thresholds=cfg.thresholds)
        below = [e for e in rep.entries if e.position in ("below", "at")]
        above = [e for e in rep.entries if e.position == "above"]
        entry = {"planes": len(rep.entries), "below_or_at": len(below), "above": len(above),
                 "max_fraction_below": max(e.sigma_minus_fraction for e in below),
                 "max_violation_below": max(e.max_violation for e in below),
                 "min_fraction_above": min(e.sigma_minus_fraction for e in above),
                 "passed": rep.passed}
        metrics[name] = entry
        ok = ok and rep.passed and bool(below) and bool(above)
    return CriterionResult(7, "moving-plane suite", ok, metrics)


def snap_to_half_grid(spec: GridSpec, value: float) -> float:
    return spec.half_grid_value(round(2.0 * (value + spec.half_width) / spec.spacing))


def criterion_8(ctx: Context) -> CriterionResult:
    cfg = ctx.config("small-oracle")
    u = ctx.solution("small-oracle")
    p = cfg.problem
    center = snap_to_half_grid(cfg.grid, verify.find_center(u)[cfg.axis])
    metrics = {}
    ok = True
    for offset in (-4.0, -2.0, 0.0):
        rep = verify.lemma8_report(u, p.alpha, p.beta, center + offset, cfg.axis)
        passed = rep.within_budget and rep.residual < cfg.thresholds.lemma8_target
        metrics[f"lambda=center{offset:+g}"] = {"residual": rep.residual, "budget": rep.budget,
                                                "passed": passed}
        ok = ok and passed
    x = cfg.grid.coords()
    gauss = GridFunction(cfg.grid, np.exp(-0.5 * x * x))
    neg = verify.lemma8_residual(gauss, p.alpha, p.beta, center - 2.0, cfg.axis)
    metrics["gaussian_negative_control"] = neg
    ok = ok and neg > 1e-2
    return CriterionResult(8, "reflection identity oracle", ok, metrics)


def criterion_9(ctx: Context) -> CriterionResult:
    total = 0
    samples = 0
    worst = 0.0
    for alpha in (0.5, 1.5, 2.0, 3.7):
        for dim in (1, 2, 3):
            for lam in (-1.0, 0.3):
                rep = verify.kernel_reflection_sample(alpha, dim, lam, 0, 10_000, ctx.seed)
                total += rep.violations
                samples += rep.samples
                worst = max(worst, rep.max_violation)
    return CriterionResult(9, "kernel reflection monotonicity", total == 0,
                           {"violations": total, "samples": samples, "max_violation": worst})


def criterion_10(ctx: Context) -> CriterionResult:
    metrics = {}
    ok = True
    for name in SCAN_PRESETS:
        cfg = ctx.config(name)
        u = ctx.solution(name)
        lams = verify.half_grid_lambdas(cfg.grid)
        factors = verify.contraction_profile(u, cfg.problem, lams, cfg.axis)
        monotone = bool(np.all(np.diff(factors) >= 0))  # lams ascend
        threshold = verify.contraction_threshold(lams, factors, cfg.thresholds.contraction_target)
        crosses = threshold is not None and factors.max() > cfg.thresholds.contraction_target
        metrics[name] = {"monotone": monotone, "threshold_lambda": threshold,
                         "max_factor": _f(factors.max()),
                         "c_hat": verify.embedding_constant(cfg.problem, cfg.grid)}
        ok = ok and monotone and crosses
    return CriterionResult(10, "contraction factor", ok, metrics)


def criterion_11(ctx: Context) -> CriterionResult:
    spec = GridSpec(1, 16.0, 256)
    x = spec.coords()
    worst = {}
    for alpha in (1.5, 2.0):
        err = 0.0
        for shift in (0.0, 0.5 * spec.spacing):  # centred and half a cell off the grid
            f = GridFunction(spec, np.exp(-0.5 * (x - shift) ** 2))
            fast = potential.bessel_potential(alpha, f)
            slow = potential.apply_bruteforce(alpha, f)
            err = max(err, _f(np.max(np.abs(fast.values - slow.values))) / f.sup())
        worst[f"alpha={alpha}"] = err
    return CriterionResult(11, "spectral vs brute-force oracle", max(worst.values()) <= 1e-6,
                           {"max_rel_difference": worst, "tolerance": 1e-6})


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11)


def run_all(seed: int = 0, echo=None) -> dict:
    ctx = Context(seed)
    results = []
    for crit in CRITERIA:
        res = crit(ctx)
        results.append(res)
        if echo:
            echo(res.line())
    return {"seed": seed, "passed": all(r.passed for r in results),
            "criteria": [asdict(r) for r in results]}
