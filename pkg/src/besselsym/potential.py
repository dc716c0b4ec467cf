"""Bessel potential B_alpha f = g_alpha * f on the periodic box.

The fast path diagonalizes the operator with the FFT: on the torus of period 2L the
discrete frequencies are m/(2L) and B_alpha multiplies each mode by the symbol
(1 + 4 pi^2 |xi|^2)^(-alpha/2).

The oracle path, :func:`apply_bruteforce`, never touches a Fourier transform.  It is a
free-space real-space sum sum_y W(x - y) f(y) whose weights come from the kernel
quadrature.  Away from the diagonal W(k) = h^n g_alpha(|k| h), the plain Riemann sum.
Near the diagonal the kernel has a kink or an integrable singularity, which would
spoil the Riemann sum at O(h^2) or worse, so the weights there are replaced by
product-integration moments int g_alpha(|kh - y|) phi(y) dy of the piecewise Lagrange
cardinal function phi (one dimension), or by the cell average of the kernel at the
singular node (two and three dimensions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import (CostGuardError, DomainError, PreconditionError, ShapeMismatchError,
                     UndefinedRatioError)
from .grid import GridFunction, GridSpec, lp_norm
from .kernel import KernelParams, cell_average, kernel_values, symbol_from_squared

BRUTEFORCE_MAX_POINTS = 4096
LAGRANGE_HALF_STENCIL = 4


@dataclass(frozen=True, eq=False)
class PotentialOperator:
    spec: GridSpec
    alpha: float
    symbol_table: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise DomainError(f"potential order must be nonnegative, got {self.alpha}")
        if self.symbol_table is None:
            table = symbol_from_squared(self.alpha, _frequency_squared(self.spec))
            table.setflags(write=False)
            object.__setattr__(self, "symbol_table", table)

    @property
    def is_identity(self) -> bool:
        return self.alpha == 0

    def apply(self, f: GridFunction) -> GridFunction:
        return apply(self, f)


def _frequency_squared(spec: GridSpec) -> np.ndarray:
    """|xi|^2 on the real-FFT layout (last axis holds nonnegative frequencies only)."""
    h = spec.spacing
    n = spec.points_per_dim
    axes = [np.fft.fftfreq(n, d=h)] * (spec.dim - 1) + [np.fft.rfftfreq(n, d=h)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return sum(m * m for m in mesh)


@lru_cache(maxsize=64)
def potential_operator(spec: GridSpec, alpha: float) -> PotentialOperator:
    return PotentialOperator(spec, float(alpha))


def apply(op: PotentialOperator, f: GridFunction) -> GridFunction:
    """Spectral application of B_alpha.  B_0 returns ``f`` untouched."""
    if f.spec != op.spec:
        raise ShapeMismatchError(f"operator grid {op.spec} does not match function grid {f.spec}")
    if op.is_identity:
        return f
    axes = tuple(range(f.spec.dim))
    spectrum = np.fft.rfftn(f.values, axes=axes)
    out = np.fft.irfftn(op.symbol_table * spectrum, s=f.spec.shape, axes=axes)
    return f.with_values(out)


def bessel_potential(alpha: float, f: GridFunction) -> GridFunction:
    return apply(potential_operator(f.spec, alpha), f)


def _cardinal_piece(cell: int, half: int, s: np.ndarray | float):
    """Lagrange basis polynomial of node 0 for the stencil serving ``cell``.

    The cell [cell, cell+1] (in units of h) interpolates through the nodes
    cell-half+1 .. cell+half.
    """
    out = 1.0
    for node in range(cell - half + 1, cell + half + 1):
        if node != 0:
            out = out * (s - node) / (0 - node)
    return out


def _product_weight(params: KernelParams, h: float, k: int, half: int) -> float:
    """h * int g(h |k - s|) phi_0(s) ds over the support [-half, half] of phi_0."""
    total = 0.0
    for cell in range(-half, half):
        def integrand(s, cell=cell):
            d = h * abs(k - s)
            if d == 0.0:
                return 0.0  # integrable endpoint; quad never needs the value itself
            return float(kernel_values(params, [d])[0]) * _cardinal_piece(cell, half, s)

        val, _err = integrate.quad(integrand, cell, cell + 1, epsabs=1e-15, epsrel=1e-12,
                                   limit=200)
        total += val
    return h * total


@lru_cache(maxsize=32)
def _near_weights(alpha: float, h: float, half: int, count: int) -> tuple[float, ...]:
    params = KernelParams(alpha, 1)
    return tuple(_product_weight(params, h, j, half) for j in range(count))


@lru_cache(maxsize=32)
def _weights_cached(alpha: float, spec: GridSpec, extent: int, half: int) -> np.ndarray:
    params = KernelParams(alpha, spec.dim)
    h = spec.spacing
    k = np.arange(-extent, extent + 1)
    mesh = np.meshgrid(*([k] * spec.dim), indexing="ij")
    k2 = sum(m * m for m in mesh)
    center = (extent,) * spec.dim
    r = h * np.sqrt(k2.astype(float))
    off = k2 > 0
    weights = np.empty(r.shape)
    weights[off] = spec.cell_volume * kernel_values(params, r[off])
    if params.singular_at_origin:
        weights[center] = spec.cell_volume * cell_average(params, h)
    else:
        weights[center] = spec.cell_volume * float(kernel_values(params, [0.0])[0])
    if spec.dim == 1 and half > 0:
        near = _near_weights(alpha, h, half, 3 * half + 1)
        for j in range(0, min(3 * half, extent) + 1):
            weights[extent + j] = weights[extent - j] = near[j]
    weights.setflags(write=False)
    return weights


def convolution_weights(alpha: float, spec: GridSpec, extent: int | None = None,
                        half_stencil: int = LAGRANGE_HALF_STENCIL) -> np.ndarray:
    """Real-space weights W[k] for integer offsets |k_d| <= extent.

    The returned array has shape (2 extent + 1,)^n with offset 0 at its centre.
    ``half_stencil = 0`` gives the plain Riemann sum (with the cell average at a
    singular origin).
    """
    if not alpha > 0:
        raise DomainError("brute-force weights need alpha > 0")
    extent = spec.points_per_dim - 1 if extent is None else int(extent)
    return _weights_cached(float(alpha), spec, extent, int(half_stencil))


def apply_bruteforce(alpha: float, f: GridFunction, *, half_stencil: int = LAGRANGE_HALF_STENCIL,
                     max_points: int = BRUTEFORCE_MAX_POINTS) -> GridFunction:
    """Free-space convolution g_alpha * f by direct O(N^(2n)) summation (test oracle)."""
    spec = f.spec
    if spec.size > max_points:
        raise CostGuardError(f"brute-force convolution on {spec.size} points exceeds {max_points}")
    weights = convolution_weights(alpha, spec, half_stencil=half_stencil)
    windows = np.lib.stride_tricks.sliding_window_view(weights, spec.shape)
    flipped = f.values[(slice(None, None, -1),) * spec.dim]
    out = np.empty(spec.shape)
    for i in range(spec.points_per_dim):
        out[i] = np.tensordot(windows[i], flipped, axes=spec.dim)
    return f.with_values(out)


def compose_check(alpha1: float, alpha2: float, f: GridFunction) -> float:
    """sup |B_a1 B_a2 f - B_(a1+a2) f|; roundoff-sized since discrete symbols multiply."""
    if alpha1 < 0 or alpha2 < 0:
        raise DomainError("orders must be nonnegative")
    two_step = bessel_potential(alpha1, bessel_potential(alpha2, f))
    one_step = bessel_potential(alpha1 + alpha2, f)
    return float(np.max(np.abs(two_step.values - one_step.values)))


def nonexpansive_check(alpha: float, f: GridFunction, p: float) -> float:
    """||B_alpha f||_p / ||f||_p."""
    denom = lp_norm(f, p)
    if denom == 0:
        raise UndefinedRatioError("norm ratio undefined for f = 0")
    return lp_norm(bessel_potential(alpha, f), p) / denom


def embedding_hypothesis(alpha: float, beta: float, dim: int, q: float) -> bool:
    """q > max(beta, n (beta - 1) / alpha)."""
    return q > max(beta, dim * (beta - 1) / alpha)


def embedding_ratio(alpha: float, f: GridFunction, q: float, beta: float) -> float:
    """||B_alpha f||_q / ||f||_(q/beta) for nonnegative f."""
    if not alpha > 0:
        raise DomainError("embedding ratio needs alpha > 0")
    if not embedding_hypothesis(alpha, beta, f.spec.dim, q):
        raise PreconditionError(
            f"q={q} violates q > max(beta, n(beta-1)/alpha) = "
            f"{max(beta, f.spec.dim * (beta - 1) / alpha)}")
    if np.any(f.values < 0):
        raise DomainError("embedding ratio is defined for nonnegative f")
    denom = lp_norm(f, q / beta)
    if denom == 0:
        raise UndefinedRatioError("norm ratio undefined for f = 0")
    return lp_norm(bessel_potential(alpha, f), q) / denom
