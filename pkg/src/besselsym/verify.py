"""Numerical checks of radial symmetry and of the moving-plane comparison on a grid.

All checks work on the discrete torus model.  Two consequences are built in:

* The centre of a computed solution is generally not a grid node.  It is located on
  the trigonometric interpolant and the data are translated spectrally so that the
  centre lands on the middle node before shells of equal radius are compared.
* Reflection about x[axis] = lam on a torus of period 2L also fixes lam + L.  The
  comparison u >= u_lam is therefore made on the half-torus between those two planes;
  beyond the second plane the reflected point is closer to the centre through the
  periodic wrap and the comparison says nothing about the free-space problem.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .errors import AmbiguousCenterError, CostGuardError, DomainError
from .grid import GridFunction, GridSpec, half_torus_mask, reflect
from .kernel import KernelParams, kernel_values
from .potential import BRUTEFORCE_MAX_POINTS, apply_bruteforce, convolution_weights, embedding_ratio
from .solver import ProblemParams


@dataclass(frozen=True)
class VerifyThresholds:
    asymmetry: float = 1e-6
    monotonicity: float = 1e-8  # relative to ||u||_inf
    slack: float = 1e-9  # relative to ||u||_inf
    tie_tol: float = 1e-9
    radius_fraction: float = 1.0  # shells are compared inside radius_fraction * L
    lemma8_target: float = 1e-4
    contraction_target: float = 0.5


DEFAULT_THRESHOLDS = VerifyThresholds()


# --------------------------------------------------------------------------- centre


def _trig_coefficients(u: GridFunction):
    spec = u.spec
    coef = np.fft.fftn(u.values) / spec.size
    freqs = np.fft.fftfreq(spec.points_per_dim, d=spec.spacing)
    return coef, freqs


def _interpolant_derivatives(coef, freqs, point, x0):
    """Value, gradient and Hessian of the trigonometric interpolant at ``point``."""
    dim = coef.ndim
    waves = [np.exp(2j * math.pi * freqs * (p - x0)) for p in point]
    w = 2j * math.pi * freqs

    def contract(factors):
        out = coef
        for f in reversed(factors):
            out = out @ f
        return float(np.real(out))

    base = list(waves)
    value = contract(base)
    grad = np.empty(dim)
    hess = np.empty((dim, dim))
    for a in range(dim):
        fa = list(base)
        fa[a] = waves[a] * w
        grad[a] = contract(fa)
        for b in range(a, dim):
            fb = list(fa)
            fb[b] = fb[b] * w
            hess[a, b] = hess[b, a] = contract(fb)
    return value, grad, hess


def find_center(u: GridFunction, tie_tol: float = DEFAULT_THRESHOLDS.tie_tol) -> np.ndarray:
    """Location of the global maximum: argmax, per-axis parabola, Newton polish.

    The parabola through three samples is only accurate to O(h^2) times the sub-cell
    offset, which is not enough for 1e-6 symmetry tests; Newton steps on the
    interpolant's gradient take the estimate to roundoff.
    """
    spec = u.spec
    vals = u.values
    n = spec.points_per_dim
    top = float(vals.max())
    idx = np.unravel_index(int(np.argmax(vals)), vals.shape)
    cand = np.argwhere(vals >= top - tie_tol * abs(top))
    sep = np.abs(cand - np.asarray(idx))
    sep = np.minimum(sep, n - sep).max(axis=1)
    if (sep > 1).any():
        coords = spec.coords()
        far = [tuple(float(coords[i]) for i in c) for c in cand]
        raise AmbiguousCenterError(f"{len(cand)} separated points attain the maximum", far)

    x = spec.coords()
    h = spec.spacing
    guess = np.empty(spec.dim)
    for a in range(spec.dim):
        lo = list(idx)
        hi = list(idx)
        lo[a] = (idx[a] - 1) % n
        hi[a] = (idx[a] + 1) % n
        fm, f0, fp = vals[tuple(lo)], vals[idx], vals[tuple(hi)]
        curv = fm - 2 * f0 + fp
        off = 0.5 * (fm - fp) / curv if curv < 0 else 0.0
        guess[a] = x[idx[a]] + h * float(np.clip(off, -0.5, 0.5))

    coef, freqs = _trig_coefficients(u)
    x0 = -spec.half_width
    point = guess.copy()
    for _ in range(30):
        _, grad, hess = _interpolant_derivatives(coef, freqs, point, x0)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.linalg.eigvalsh(hess) < 0) or np.abs(step).max() > h:
            break
        point = point - step
        if np.abs(step).max() < 1e-15 * spec.half_width:
            break
    if np.abs(point - guess).max() > h:
        point = guess
    return point


def recentered_values(u: GridFunction, center) -> np.ndarray:
    """Values of x -> u(x + center) on the grid (spectral translation)."""
    spec = u.spec
    coef = np.fft.fftn(u.values)
    freqs = np.fft.fftfreq(spec.points_per_dim, d=spec.spacing)
    for a, c in enumerate(center):
        shape = [1] * spec.dim
        shape[a] = spec.points_per_dim
        coef = coef * np.exp(2j * math.pi * freqs * c).reshape(shape)
    return np.real(np.fft.ifftn(coef))


# --------------------------------------------------------------------------- symmetry


@dataclass
class SymmetryReport:
    center: list
    asymmetry: float
    monotonicity_violation: float
    sup_norm: float
    passed: bool
    thresholds: dict
    profile_radius: np.ndarray = field(repr=False)
    profile_mean: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["profile_radius"] = self.profile_radius.tolist()
        d["profile_mean"] = self.profile_mean.tolist()
        return d


def check_symmetry(u: GridFunction, thresholds: VerifyThresholds = DEFAULT_THRESHOLDS,
                   center=None) -> SymmetryReport:
    """Radial symmetry and radial monotone decrease about the maximum.

    asymmetry: max over shells {|x - c| = const} of (max - min)/||u||_inf.
    monotonicity_violation: largest increase between consecutive radial bins of width
    h of the bin-averaged profile.
    """
    u.require_positive("symmetry input")
    spec = u.spec
    center = find_center(u, thresholds.tie_tol) if center is None else np.asarray(center, float)
    shifted = recentered_values(u, center)
    m = np.arange(spec.points_per_dim) - spec.center_index
    mesh = np.meshgrid(*([m] * spec.dim), indexing="ij")
    m2 = sum(g * g for g in mesh).ravel()
    vals = shifted.ravel()
    limit = (thresholds.radius_fraction * spec.center_index) ** 2
    inside = m2 < limit
    m2, vals = m2[inside], vals[inside]
    sup = u.sup()

    order = np.argsort(m2, kind="stable")
    m2s, vs = m2[order], vals[order]
    starts = np.flatnonzero(np.r_[True, np.diff(m2s) > 0])
    spread = np.maximum.reduceat(vs, starts) - np.minimum.reduceat(vs, starts)
    asym = float(spread.max() / sup)

    bins = np.floor(np.sqrt(m2) + 1e-12).astype(int)
    counts = np.bincount(bins)
    sums = np.bincount(bins, weights=vals)
    filled = counts > 0
    means = sums[filled] / counts[filled]
    radii = np.flatnonzero(filled) * spec.spacing
    increments = np.diff(means)
    mono = float(max(increments.max(initial=0.0), 0.0))

    passed = asym <= thresholds.asymmetry and mono <= thresholds.monotonicity * sup
    return SymmetryReport([float(c) for c in center], asym, mono, sup, bool(passed),
                          {"asymmetry": thresholds.asymmetry,
                           "monotonicity": thresholds.monotonicity * sup,
                           "radius_fraction": thresholds.radius_fraction},
                          radii, means)


# --------------------------------------------------------------------------- moving plane


@lru_cache(maxsize=16)
def embedding_constant(params: ProblemParams, spec: GridSpec,
                       scales: tuple = tuple(np.geomspace(0.5, 2.0, 7)),
                       width: float = 1.0) -> float:
    """Empirical stand-in for the constant of the contraction estimate.

    beta times the largest ratio ||B_alpha f||_q / ||f||_(q/beta) over centred Gaussians
    of widths ``width * s``.  The true constant has no formula; this number is only a
    reproducible proxy.
    """
    r2 = spec.radius_squared()
    best = 0.0
    for s in scales:
        f = GridFunction(spec, np.exp(-0.5 * r2 / (width * s) ** 2))
        best = max(best, embedding_ratio(params.alpha, f, params.q_exponent, params.beta))
    return params.beta * best


def tail_integrals(u: GridFunction, q: float, axis: int = 0) -> np.ndarray:
    """T[i] = sum over x[axis] < x_i of u^q h^n, for i = 0..N (T[N] is the whole box).

    A running sum of nonnegative slab sums, so T is nondecreasing in floating point too.
    """
    other = tuple(a for a in range(u.spec.dim) if a != axis)
    slabs = np.sum(u.values ** q, axis=other) if other else u.values ** q
    return np.concatenate([[0.0], np.cumsum(slabs * u.spec.cell_volume)])


def check_contraction(u: GridFunction, params: ProblemParams, lam: float, axis: int = 0,
                      c_hat: float | None = None, tails: np.ndarray | None = None) -> float:
    """c_hat * (int_{x[axis] < lam} u^q)^((beta-1)/q)."""
    if c_hat is None:
        c_hat = embedding_constant(params, u.spec)
    if tails is None:
        tails = tail_integrals(u, params.q_exponent, axis)
    below = int(np.count_nonzero(u.spec.coords() < lam - 1e-9 * u.spec.spacing))
    return c_hat * float(tails[below]) ** ((params.beta - 1) / params.q_exponent)


def contraction_profile(u: GridFunction, params: ProblemParams, lambdas, axis: int = 0) -> np.ndarray:
    c_hat = embedding_constant(params, u.spec)
    tails = tail_integrals(u, params.q_exponent, axis)
    return np.array([check_contraction(u, params, lam, axis, c_hat, tails) for lam in lambdas])


@dataclass
class PlaneResult:
    lam: float
    position: str  # below | at | near | above
    sigma_minus_fraction: float
    max_violation: float
    points: int
    contraction_factor: float | None
    verdict: bool | None


@dataclass
class MovingPlaneReport:
    axis: int
    center: float
    slack: float
    entries: list[PlaneResult]
    c_hat: float | None = None
    threshold_lambda: float | None = None

    @property
    def lambdas(self) -> list[float]:
        return [e.lam for e in self.entries]

    @property
    def passed(self) -> bool:
        return all(e.verdict is not False for e in self.entries)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    CSV_FIELDS = ("lambda", "position", "sigma_minus_fraction", "max_violation", "points",
                  "contraction_factor", "verdict")

    def rows(self):
        for e in self.entries:
            yield (e.lam, e.position, e.sigma_minus_fraction, e.max_violation, e.points,
                   "" if e.contraction_factor is None else e.contraction_factor,
                   "" if e.verdict is None else int(e.verdict))


def half_grid_lambdas(spec: GridSpec, lo: float | None = None, hi: float | None = None) -> list[float]:
    """All half-grid plane positions in [lo, hi] (default: the whole box)."""
    ks = np.arange(2 * spec.points_per_dim)
    lams = -spec.half_width + 0.5 * spec.spacing * ks
    keep = np.ones(lams.shape, bool)
    if lo is not None:
        keep &= lams >= lo - 1e-12
    if hi is not None:
        keep &= lams <= hi + 1e-12
    return [float(v) for v in lams[keep]]


def _position(lam, center, spec: GridSpec) -> str:
    L = spec.half_width
    d = (lam - center + L) % (2 * L) - L
    eps = 1e-6 * spec.spacing
    if L - abs(d) <= eps:
        return "at"  # the antipodal plane c + L is fixed by the same reflection
    if d < -eps:
        return "below"
    if d <= eps:
        return "at"
    if d < 0.25 * spec.spacing:
        return "near"  # sub-resolution offset from the centre; no expectation
    return "above"


def sigma_minus_scan(u: GridFunction, axis: int = 0, lambdas=None,
                     thresholds: VerifyThresholds = DEFAULT_THRESHOLDS,
                     params: ProblemParams | None = None, center: float | None = None
                     ) -> MovingPlaneReport:
    """Size of {x in Sigma_lam : u(x) < u_lam(x)} for each plane position.

    Planes below the centre must give an empty set (the moving-plane prediction); planes
    above it must give a nonempty one (orientation control).  A point
    counts as a violation when u_lam - u exceeds ``slack * ||u||_inf``.
    """
    u.require_positive("moving-plane input")
    spec = u.spec
    if center is None:
        center = float(find_center(u, thresholds.tie_tol)[axis])
    if lambdas is None:
        lambdas = half_grid_lambdas(spec)
    sup = u.sup()
    slack = thresholds.slack * sup
    c_hat = embedding_constant(params, spec) if params is not None else None
    tails = tail_integrals(u, params.q_exponent, axis) if params is not None else None
    entries = []
    for lam in lambdas:
        mirrored = reflect(u, axis, lam)
        sel = half_torus_mask(spec, axis, lam)
        gap = mirrored.values[sel] - u.values[sel]
        worst = float(max(gap.max(initial=0.0), 0.0))
        frac = float(np.count_nonzero(gap > slack) / max(gap.size, 1))
        pos = _position(lam, center, spec)
        if pos in ("below", "at"):
            verdict = frac == 0.0 and worst <= slack
        elif pos == "above":
            verdict = frac > 0.0
        else:
            verdict = None
        factor = check_contraction(u, params, lam, axis, c_hat, tails) if params is not None else None
        entries.append(PlaneResult(float(lam), pos, frac, worst, int(gap.size), factor, verdict))
    report = MovingPlaneReport(axis, center, slack, entries, c_hat)
    if params is not None:
        report.threshold_lambda = contraction_threshold(report.lambdas,
                                                        [e.contraction_factor for e in entries],
                                                        thresholds.contraction_target)
    return report


def contraction_threshold(lambdas, factors, target: float = 0.5) -> float | None:
    """Largest plane position whose contraction factor is <= target."""
    ok = [lam for lam, f in zip(lambdas, factors) if f <= target]
    return max(ok) if ok else None


# --------------------------------------------------------------------------- reflection identity


def _window(weights, extent, target, lo, hi):
    """Slice of ``weights`` giving W(target - y) for y = lo..hi along one axis."""
    start = extent + target - lo
    stop = extent + target - hi - 1
    return slice(start, stop if stop >= 0 else None, -1)


@dataclass
class ReflectionIdentityResult:
    lam: float
    axis: int
    residual: float
    budget: float
    equation_residual: float
    points: int

    @property
    def within_budget(self) -> bool:
        return self.residual <= self.budget


def lemma8_residual(u: GridFunction, alpha: float, beta: float, lam: float, axis: int = 0,
                    max_points: int = BRUTEFORCE_MAX_POINTS) -> float:
    """sup over x in Sigma_lam of |(u - u_lam)(x) - sum_y (W(x-y) - W(x^lam-y)) (u^b - u_lam^b)(y)|.

    Free-space model: u is extended by zero outside the box, the sum runs over the part
    of Sigma_lam covered by the box or its mirror image, and x ranges over points whose
    mirror image stays in the box.  W are the brute-force convolution weights.
    """
    return _lemma8(u, alpha, beta, lam, axis, max_points)[0]


def lemma8_report(u: GridFunction, alpha: float, beta: float, lam: float, axis: int = 0,
                  max_points: int = BRUTEFORCE_MAX_POINTS) -> ReflectionIdentityResult:
    """Residual together with its budget.

    With symmetric weights the discrete identity is exact up to the equation residual
    e = u - W * u^beta: the difference equals e(x) - e(x^lam).  Hence the budget
    2 ||e||_inf plus roundoff.
    """
    res, points = _lemma8(u, alpha, beta, lam, axis, max_points)
    image = apply_bruteforce(alpha, u.with_values(u.values ** beta), max_points=max_points)
    eq = float(np.max(np.abs(u.values - image.values)))
    budget = 2.0 * eq + 1e-12 * max(u.sup(), 1.0)
    return ReflectionIdentityResult(float(lam), axis, res, budget, eq, points)


def _lemma8(u, alpha, beta, lam, axis, max_points):
    spec = u.spec
    if spec.size > max_points:
        raise CostGuardError(f"reflection identity oracle on {spec.size} points exceeds {max_points}")
    if not 0 <= axis < spec.dim:
        raise DomainError(f"axis {axis} out of range")
    u.require_positive("reflection identity input")
    n = spec.points_per_dim
    k = spec.half_grid_index(lam)
    j0, j1 = min(0, k - (n - 1)), max(n - 1, k)
    length = j1 - j0 + 1

    moved = np.moveaxis(u.values, axis, 0)
    ext = np.zeros((length,) + moved.shape[1:])
    ext[-j0:-j0 + n] = moved
    power = ext ** beta
    jj = np.arange(j0, j1 + 1)
    power_m = power[k - jj - j0]  # reflected samples; the extended range is mirror-closed
    diff = power - power_m
    diff[2 * jj < k] = 0.0  # restrict the sum to Sigma_lam

    extent = max(length - 1, n - 1)
    weights = np.moveaxis(convolution_weights(alpha, spec, extent=extent), axis, 0)

    targets = [i for i in range(n) if 2 * i >= k and 0 <= k - i <= n - 1]
    others = list(np.ndindex(*moved.shape[1:]))
    worst = 0.0
    for i in targets:
        mirror = k - i
        for rest in others:
            sl_x = [_window(weights, extent, i, j0, j1)]
            sl_m = [_window(weights, extent, mirror, j0, j1)]
            for t in rest:
                s = _window(weights, extent, t, 0, n - 1)
                sl_x.append(s)
                sl_m.append(s)
            kernel_gap = weights[tuple(sl_x)] - weights[tuple(sl_m)]
            rhs = float(np.sum(kernel_gap * diff))
            lhs = moved[(i,) + rest] - moved[(mirror,) + rest]
            worst = max(worst, abs(float(lhs - rhs)))
    return worst, len(targets) * len(others)


# --------------------------------------------------------------------------- kernel reflection


@dataclass
class ReflectionSample:
    max_violation: float
    violations: int
    samples: int


def kernel_reflection_sample(alpha: float, dim: int, lam: float, axis: int = 0,
                             sample_count: int = 10_000, seed: int = 0,
                             extent: float = 6.0) -> ReflectionSample:
    """Compare g(x - y) with g(x^lam - y) for random x, y in Sigma_lam."""
    if not 0 <= axis < dim:
        raise DomainError(f"axis {axis} out of range")
    params = KernelParams(alpha, dim)
    rng = np.random.default_rng(seed)

    def draw(count):
        pts = rng.uniform(-extent, extent, size=(count, dim))
        pts[:, axis] = lam + rng.uniform(0.0, extent, size=count)
        return pts

    x = draw(sample_count)
    y = draw(sample_count)
    keep = np.linalg.norm(x - y, axis=1) > 1e-9 * extent  # coincident pairs are excluded
    x, y = x[keep], y[keep]
    xr = x.copy()
    xr[:, axis] = 2 * lam - x[:, axis]
    d_near = np.linalg.norm(x - y, axis=1)
    d_far = np.linalg.norm(xr - y, axis=1)
    g = kernel_values(params, np.concatenate([d_near, d_far]))
    gap = g[len(d_near):] - g[:len(d_near)]
    return ReflectionSample(float(max(gap.max(initial=0.0), 0.0)), int(np.count_nonzero(gap > 0)),
                            int(len(d_near)))


def kernel_reflection_monotonicity(alpha: float, dim: int, lam: float, axis: int = 0,
                                   sample_count: int = 10_000, seed: int = 0) -> float:
    """Largest (g(x^lam - y) - g(x - y))_+ over seeded samples; 0 when the inequality holds."""
    return kernel_reflection_sample(alpha, dim, lam, axis, sample_count, seed).max_violation
