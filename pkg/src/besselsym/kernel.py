"""Bessel kernel g_alpha on R^n.

The kernel is the radial function

    g_alpha(r) = 1/gamma(alpha) * int_0^inf exp(-pi r^2/d) exp(-d/(4 pi)) d^((alpha-n)/2) dd/d

with gamma(alpha) = (4 pi)^(alpha/2) Gamma(alpha/2).  Substituting d = e^t turns the
integrand into exp(phase(t)) with

    phase(t) = -pi r^2 e^-t - e^t/(4 pi) + c t,    c = (alpha - n)/2,

which decays doubly exponentially on both sides of a single peak whenever r > 0.
The peak is known in closed form, so both evaluators below centre their window on it.

Two independent evaluators are provided:

* :func:`bessel_kernel_estimate` - adaptive Gauss-Kronrod (QUADPACK) with an error
  estimate; this is the pointwise operation.
* :func:`kernel_values` - a vectorized trapezoid rule in t on one shared node set.
  For this class of integrand the trapezoid rule converges geometrically, and using a
  shared node set makes the result exactly monotone in r, which the moving-plane
  checks rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError, QuadratureError, SingularityError

FOUR_PI = 4.0 * math.pi

# Relative size (in log units) below which the integrand is dropped.
_TAIL_LOG = 50.0
_MAX_NODES = 400_000
_CHUNK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class KernelParams:
    alpha: float
    dim: int

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DomainError(f"kernel order must be positive, got alpha={self.alpha}")
        if self.dim not in (1, 2, 3):
            raise DomainError(f"dimension must be 1, 2 or 3, got {self.dim}")

    @property
    def shift(self) -> float:
        """The exponent c = (alpha - n)/2 of the substituted integrand."""
        return 0.5 * (self.alpha - self.dim)

    @property
    def singular_at_origin(self) -> bool:
        return self.alpha <= self.dim


@dataclass(frozen=True)
class QuadratureConfig:
    """Controls for the adaptive evaluator.

    Tolerances apply to the peak-normalised integral (the integrand equals 1 at its
    maximum).  ``t_min``/``t_max`` give the minimum window in t = log(delta); the window
    is widened automatically when the peak or a slow tail lies outside it.
    """

    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    t_min: float = -40.0
    t_max: float = 40.0
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if not self.t_min < self.t_max:
            raise DomainError("t_min must be smaller than t_max")
        if self.max_subdivisions < 2:
            # the peak is passed as a break point, so QUADPACK needs two intervals
            raise DomainError("max_subdivisions must be at least 2")


DEFAULT_QUAD = QuadratureConfig()


def gamma_alpha(alpha: float) -> float:
    """Normalising constant (4 pi)^(alpha/2) Gamma(alpha/2)."""
    if not alpha > 0:
        raise DomainError(f"gamma_alpha needs alpha > 0, got {alpha}")
    return FOUR_PI ** (alpha / 2) * math.gamma(alpha / 2)


def _phase(t, r2, c):
    """Log of the substituted integrand; r2 is pi*r^2 (may be 0)."""
    with np.errstate(over="ignore", invalid="ignore"):
        inner = np.where(r2 > 0, r2 * np.exp(-t), 0.0)
        return -inner - np.exp(t) / FOUR_PI + c * t


def _peak(r, c):
    """Location of the maximum of the phase, vectorized over r."""
    r = np.asarray(r, dtype=float)
    s = np.hypot(c, r)
    with np.errstate(divide="ignore"):
        if c >= 0:
            e = 2 * math.pi * (c + s)
        else:
            # c + s suffers cancellation for small r; use the conjugate form.
            e = 2 * math.pi * r * r / (s - c)
        return np.log(e)


def _window(r, c):
    """Per-radius peak, peak phase, width and [lo, hi] window, vectorized."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    r2 = math.pi * r * r
    tp = _peak(r, c)
    php = _phase(tp, r2, c)
    curv = r2 * np.exp(-tp) + np.exp(tp) / FOUR_PI
    sig = 1.0 / np.sqrt(curv)
    bounds = []
    for sign in (-1.0, 1.0):
        d = np.minimum(sig, 1.0)
        for _ in range(200):
            live = _phase(tp + sign * d, r2, c) - php > -_TAIL_LOG
            if not live.any():
                break
            d = np.where(live, 2 * d, d)
        else:  # pragma: no cover - the phase always decays
            raise QuadratureError("could not bracket the kernel integrand")
        bounds.append(tp + sign * d)
    return tp, php, sig, bounds[0], bounds[1]


def _check_radius(params: KernelParams, r_min: float):
    if r_min < 0 or not math.isfinite(r_min):
        raise DomainError(f"radius must be a nonnegative finite number, got {r_min}")
    if r_min == 0 and params.singular_at_origin:
        raise SingularityError(
            f"g_alpha diverges at the origin for alpha={params.alpha} <= n={params.dim}"
        )


def bessel_kernel_estimate(params: KernelParams, radius: float,
                           quad: QuadratureConfig = DEFAULT_QUAD) -> tuple[float, float]:
    """Adaptive quadrature for g_alpha(radius).

    Returns ``(value, abs_error_estimate)``.  Raises :class:`QuadratureError` when
    QUADPACK reports that it could not meet the tolerance.
    """
    r = float(radius)
    _check_radius(params, r)
    c = params.shift
    tp, php, _, lo, hi = _window([r], c)
    tp, php = float(tp[0]), float(php[0])
    lo = min(float(lo[0]), quad.t_min)
    hi = max(float(hi[0]), quad.t_max)
    r2 = math.pi * r * r

    def integrand(t):
        return math.exp(float(_phase(t, r2, c)) - php)

    out = integrate.quad(integrand, lo, hi, points=[tp], epsabs=quad.abs_tol,
                         epsrel=quad.rel_tol, limit=quad.max_subdivisions,
                         full_output=1)
    scale = math.exp(php) / gamma_alpha(params.alpha)
    if len(out) == 4:
        raise QuadratureError(f"kernel quadrature failed at r={r}: {out[3]}",
                              error_estimate=out[1] * scale)
    return out[0] * scale, out[1] * scale


def bessel_kernel(params: KernelParams, radius: float,
                  quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """g_alpha at a single radius (adaptive quadrature)."""
    return bessel_kernel_estimate(params, radius, quad)[0]


def kernel_values(params: KernelParams, radii) -> np.ndarray:
    """Vectorized g_alpha over an array of radii (trapezoid rule in log-delta).

    All radii in one call share a single node set, so the output is monotone
    nonincreasing in the radius to the last bit.  Repeated radii are computed once.
    """
    r = np.asarray(radii, dtype=float)
    if r.size == 0:
        return np.empty(r.shape)
    uniq, inv = np.unique(r.ravel(), return_inverse=True)
    _check_radius(params, float(uniq[0]))
    if not np.isfinite(uniq[-1]):
        raise DomainError("radius must be finite")
    c = params.shift
    tp, php, sig, lo, hi = _window(uniq, c)
    step = min(0.2, float(sig.min()) / 4)
    t0, t1 = float(lo.min()), float(hi.max())
    count = int(math.ceil((t1 - t0) / step)) + 1
    if count > _MAX_NODES:
        raise QuadratureError(f"kernel window needs {count} nodes (limit {_MAX_NODES})")
    t = t0 + step * np.arange(count)
    # Only shift radii whose raw value would underflow; the others stay on the same
    # unshifted scale so that comparisons between them are exact.
    shift = np.where(php < -600.0, php, 0.0)
    r2 = math.pi * uniq * uniq
    vals = np.empty(uniq.size)
    rows = max(1, _CHUNK_ELEMENTS // count)
    for a in range(0, uniq.size, rows):
        b = min(a + rows, uniq.size)
        ph = _phase(t[None, :], r2[a:b, None], c) - shift[a:b, None]
        vals[a:b] = np.exp(ph).sum(axis=1)
    vals *= step * np.exp(shift) / gamma_alpha(params.alpha)
    return vals[inv].reshape(r.shape)


def bessel_kernel_closed_form(alpha: float, dim: int, r):
    """Closed form through the modified Bessel function K_nu.

    g_alpha(r) = r^((alpha-n)/2) K_((n-alpha)/2)(r) / (2^((n+alpha-2)/2) pi^(n/2) Gamma(alpha/2)).
    Used as an oracle that shares no code with the quadrature paths.
    """
    r = np.asarray(r, dtype=float)
    nu = 0.5 * (dim - alpha)
    const = 2.0 ** (0.5 * (dim + alpha - 2)) * math.pi ** (dim / 2) * math.gamma(alpha / 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = r ** (-nu) * special.kv(nu, r) / const
    if alpha > dim:
        at0 = math.gamma(-nu) / (2.0 ** dim * math.pi ** (dim / 2) * math.gamma(alpha / 2))
        out = np.where(r == 0, at0, out)
    return out[()] if out.ndim == 0 else out


def bessel_symbol(params: KernelParams, freq) -> np.ndarray | float:
    """Fourier symbol (1 + 4 pi^2 |xi|^2)^(-alpha/2).

    ``freq`` is a frequency vector (last axis of length ``dim``) in cycles per unit
    length; a bare scalar is accepted when ``dim == 1``.
    """
    xi = np.asarray(freq, dtype=float)
    if xi.ndim == 0:
        if params.dim != 1:
            raise DomainError("scalar frequency only allowed in one dimension")
        xi2 = xi * xi
    else:
        if xi.shape[-1] != params.dim:
            raise DomainError(f"frequency vectors must have length {params.dim}")
        xi2 = np.sum(xi * xi, axis=-1)
    out = symbol_from_squared(params.alpha, xi2)
    return float(out) if np.ndim(out) == 0 else out


def symbol_from_squared(alpha: float, xi2):
    return (1.0 + 4.0 * math.pi ** 2 * np.asarray(xi2, dtype=float)) ** (-0.5 * alpha)


def sphere_area(dim: int) -> float:
    """Surface measure of the unit sphere S^(dim-1)."""
    return 2.0 * math.pi ** (dim / 2) / math.gamma(dim / 2)


def _radial_bounds(params: KernelParams) -> tuple[float, float]:
    # r^n g(r) ~ r^min(alpha, n) near 0 and ~ e^-r at infinity.
    s_lo = -40.0 / min(params.alpha, params.dim) - 2.0
    return s_lo, math.log(90.0)


def kernel_mass(params: KernelParams, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Integral of g_alpha over R^n through its radial profile.

    The radial integral is taken in s = log r so that both the algebraic behaviour at
    the origin and the exponential tail are resolved by the same adaptive rule.
    """
    return kernel_mass_estimate(params, quad)[0]


def kernel_mass_estimate(params: KernelParams,
                         quad: QuadratureConfig = DEFAULT_QUAD) -> tuple[float, float]:
    area = sphere_area(params.dim)
    n = params.dim

    def integrand(s):
        r = math.exp(s)
        return area * float(kernel_values(params, [r])[0]) * math.exp(n * s)

    s_lo, s_hi = _radial_bounds(params)
    out = integrate.quad(integrand, s_lo, s_hi, epsabs=0.0, epsrel=max(quad.rel_tol, 1e-13),
                         limit=max(quad.max_subdivisions, 200), full_output=1)
    if len(out) == 4:
        raise QuadratureError(f"mass quadrature failed: {out[3]}", error_estimate=out[1])
    return out[0], out[1]


def _radial_moment(params: KernelParams, radius: float) -> float:
    """int_0^radius g(r) r^(n-1) dr."""
    n = params.dim

    def integrand(s):
        return float(kernel_values(params, [math.exp(s)])[0]) * math.exp(n * s)

    s_lo, _ = _radial_bounds(params)
    val, err, *rest = integrate.quad(integrand, s_lo, math.log(radius), epsabs=0.0,
                                     epsrel=1e-13, limit=400, full_output=1)
    if rest and len(rest) == 2:
        raise QuadratureError(f"radial moment quadrature failed: {rest[1]}", err)
    return val


def cell_average(params: KernelParams, h: float, nodes: int = 24) -> float:
    """Average of g_alpha over the cube [-h/2, h/2]^n centred on the singularity.

    The cube is split into 2n pyramids with apex at the origin.  Along each ray the
    radial integral is int_0^rho g(r) r^(n-1) dr = G(h/2) + int_(h/2)^rho (...), where the
    first part carries the singularity and the second is smooth.
    """
    n = params.dim
    half = 0.5 * h
    g_inner = _radial_moment(params, half)
    if n == 1:
        return 2.0 * g_inner / h
    a, wa = np.polynomial.legendre.leggauss(nodes)
    grids = np.meshgrid(*([a] * (n - 1)), indexing="ij")
    weights = np.prod(np.meshgrid(*([wa] * (n - 1)), indexing="ij"), axis=0)
    rho = half * np.sqrt(1.0 + sum(g * g for g in grids))
    # Smooth part: Gauss-Legendre on [h/2, rho] for every ray at once.
    b, wb = np.polynomial.legendre.leggauss(32)
    span = (rho - half)[..., None]
    rr = half + 0.5 * span * (b + 1.0)
    outer = 0.5 * span[..., 0] * np.sum(wb * kernel_values(params, rr) * rr ** (n - 1), axis=-1)
    moment = g_inner + outer
    total = 2 * n * half ** n * np.sum(weights * moment / rho ** n)
    return float(total / h ** n)
