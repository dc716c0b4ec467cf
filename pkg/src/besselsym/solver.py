"""Positive ground states of u = g_alpha * u^beta by normalized fixed-point iteration.

Plain Picard iteration u <- B_alpha(u^beta) is useless for beta > 1: the amplitude
either collapses to zero or blows up.  The iteration here separates shape and scale:

    w_k = B_alpha(v_k^beta),  lam_k = 1/||w_k||_inf,  v_(k+1) = lam_k w_k,

so every iterate has unit sup norm.  At a fixed point v = lam B_alpha(v^beta), and by
homogeneity u = lam^(1/(beta-1)) v solves u = B_alpha(u^beta) exactly.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import (ConfigError, DomainError, ShapeMismatchError, SolverDivergence, SolverError,
                     SolverNotConverged)
from .grid import GridFunction, GridSpec, read_gridfunction
from .potential import apply, embedding_hypothesis, potential_operator

log = logging.getLogger(__name__)

CLAMP_FRACTION = 1e-12
LAMBDA_GUARD = (1e-8, 1e8)


@dataclass(frozen=True)
class ProblemParams:
    alpha: float
    beta: float
    dim: int
    q_exponent: float

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if not self.beta > 1:
            raise ConfigError(f"beta must exceed 1, got {self.beta}")
        if self.dim not in (1, 2, 3):
            raise ConfigError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not embedding_hypothesis(self.alpha, self.beta, self.dim, self.q_exponent):
            bound = max(self.beta, self.dim * (self.beta - 1) / self.alpha)
            raise ConfigError(f"q_exponent={self.q_exponent} must exceed {bound}")


INIT_PROFILES = ("gaussian", "shifted_gaussian", "custom")


@dataclass(frozen=True)
class SolverConfig:
    init_profile: str = "gaussian"
    init_center: tuple = ()
    init_width: float = 1.0
    tol_residual: float = 1e-8
    tol_delta: float = 1e-10
    max_iters: int = 5000
    damping: float = 1.0
    init_file: str | None = None

    def __post_init__(self):
        if self.init_profile not in INIT_PROFILES:
            raise ConfigError(f"init_profile must be one of {INIT_PROFILES}")
        if not (self.tol_residual > 0 and self.tol_delta > 0):
            raise ConfigError("tolerances must be positive")
        if int(self.max_iters) < 1:
            raise ConfigError("max_iters must be at least 1")
        if not 0 < self.damping <= 1:
            raise ConfigError("damping must lie in (0, 1]")
        if self.init_profile == "custom" and not self.init_file:
            raise ConfigError("init_profile 'custom' needs init_file")
        if not self.init_width > 0:
            raise ConfigError("init_width must be positive")
        object.__setattr__(self, "init_center", tuple(float(c) for c in self.init_center))


class Status(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    DIVERGED = "diverged"


@dataclass
class IterationRecord:
    iter: int
    sup: float
    lam: float
    delta: float
    residual: float


@dataclass
class SolverTrace:
    records: list[IterationRecord] = field(default_factory=list)
    status: Status | None = None

    CSV_FIELDS = ("iter", "sup", "lambda", "delta", "residual")

    def rows(self):
        for r in self.records:
            yield (r.iter, r.sup, r.lam, r.delta, r.residual)

    @property
    def final(self) -> IterationRecord | None:
        return self.records[-1] if self.records else None

    def to_dict(self) -> dict:
        return {"status": self.status.value if self.status else None,
                "records": [asdict(r) for r in self.records]}


def initial_profile(spec: GridSpec, config: SolverConfig) -> GridFunction:
    if config.init_profile == "custom":
        f, _ = read_gridfunction(config.init_file)
        if f.spec != spec:
            raise ShapeMismatchError(f"{config.init_file} lives on {f.spec}, expected {spec}")
        return f
    center = config.init_center or (0.0,) * spec.dim
    if config.init_profile == "shifted_gaussian" and not config.init_center:
        raise ConfigError("shifted_gaussian needs init_center")
    if len(center) != spec.dim:
        raise ConfigError(f"init_center has {len(center)} entries, grid has dim {spec.dim}")
    r2 = spec.radius_squared(center)
    return GridFunction(spec, np.exp(-0.5 * r2 / config.init_width ** 2))


def positive_power(values: np.ndarray, beta: float) -> np.ndarray:
    """values^beta after clamping roundoff-level negatives to zero.

    Negatives deeper than CLAMP_FRACTION of the sup norm mean positivity was really
    lost and are reported instead of silently repaired.
    """
    scale = float(np.max(np.abs(values)))
    low = float(values.min())
    if low < -CLAMP_FRACTION * scale:
        raise SolverError(f"iterate lost positivity (min {low:.3e}, scale {scale:.3e})")
    return np.maximum(values, 0.0) ** beta


def residual(u: GridFunction, params: ProblemParams) -> float:
    """||u - B_alpha(u^beta)||_inf."""
    if u.spec.dim != params.dim:
        raise DomainError("grid dimension does not match the problem")
    u.require_positive("residual input")
    op = potential_operator(u.spec, params.alpha)
    image = apply(op, u.with_values(u.values ** params.beta))
    return float(np.max(np.abs(u.values - image.values)))


def solve_ground_state(params: ProblemParams, spec: GridSpec, config: SolverConfig = SolverConfig(),
                       initial: GridFunction | None = None) -> tuple[GridFunction, SolverTrace]:
    """Run the normalized iteration; return the reconstructed solution and its trace.

    Raises :class:`SolverDivergence` when lam_k leaves LAMBDA_GUARD and
    :class:`SolverNotConverged` after ``max_iters``; both carry the trace.
    """
    if spec.dim != params.dim:
        raise ConfigError(f"grid dimension {spec.dim} differs from problem dimension {params.dim}")
    if initial is None:
        initial = initial_profile(spec, config)
    if initial.spec != spec:
        raise ShapeMismatchError("initial profile lives on a different grid")
    if not initial.is_positive():
        raise ConfigError("initial profile must be strictly positive")

    op = potential_operator(spec, params.alpha)
    beta = params.beta
    expo = 1.0 / (beta - 1.0)
    axes = tuple(range(spec.dim))
    symbol = op.symbol_table

    def image(values):
        spectrum = np.fft.rfftn(positive_power(values, beta), axes=axes)
        return np.fft.irfftn(symbol * spectrum, s=spec.shape, axes=axes)

    trace = SolverTrace()
    v = initial.values / initial.values.max()
    lam_prev = None
    d = config.damping
    for k in range(1, int(config.max_iters) + 1):
        w = image(v)
        sup = float(w.max())
        lam = 1.0 / sup if sup > 0 else math.inf
        if not LAMBDA_GUARD[0] <= lam <= LAMBDA_GUARD[1]:
            trace.records.append(IterationRecord(k, sup, lam, math.nan, math.nan))
            trace.status = Status.DIVERGED
            raise SolverDivergence(f"scaling factor {lam:.3e} left {LAMBDA_GUARD} at iteration {k}",
                                   trace)
        step = w * lam
        if d < 1.0:
            step = (1.0 - d) * v + d * step
            step /= step.max()
        delta = float(np.max(np.abs(step - v)))
        v = step
        u_vals = lam ** expo * v
        res = float(np.max(np.abs(u_vals - image(u_vals))))
        trace.records.append(IterationRecord(k, sup, lam, delta, res))
        lam_change = math.inf if lam_prev is None else abs(lam - lam_prev) / lam
        lam_prev = lam
        if delta <= config.tol_delta and lam_change <= config.tol_delta and res <= config.tol_residual:
            trace.status = Status.CONVERGED
            log.info("converged after %d iterations, residual %.3e", k, res)
            return GridFunction(spec, u_vals), trace
    trace.status = Status.MAX_ITERS
    raise SolverNotConverged(f"no convergence in {config.max_iters} iterations "
                             f"(delta {delta:.3e}, residual {res:.3e})", trace)
