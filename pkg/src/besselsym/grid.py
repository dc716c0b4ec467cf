"""Truncated periodic box [-L, L)^n, sampled functions, norms, reflections and masks."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AlignmentError, DomainError, SchemaError, ShapeMismatchError

FILE_MAGIC = "# besselsym-gridfunction 1"
_ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    dim: int
    half_width: float
    points_per_dim: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise DomainError(f"dimension must be 1, 2 or 3, got {self.dim}")
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise DomainError(f"half_width must be positive, got {self.half_width}")
        n = self.points_per_dim
        if not isinstance(n, (int, np.integer)) or n <= 0 or n % 2:
            raise DomainError(f"points_per_dim must be a positive even integer, got {n}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_dim,) * self.dim

    @property
    def size(self) -> int:
        return self.points_per_dim ** self.dim

    @property
    def center_index(self) -> int:
        """Index of the coordinate 0 along any axis."""
        return self.points_per_dim // 2

    def coords(self) -> np.ndarray:
        """1-D sample coordinates x_i = -L + i h."""
        return -self.half_width + self.spacing * np.arange(self.points_per_dim)

    def mesh(self) -> tuple[np.ndarray, ...]:
        x = self.coords()
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def radius_squared(self, center=None) -> np.ndarray:
        center = np.zeros(self.dim) if center is None else np.asarray(center, float)
        return sum((m - c) ** 2 for m, c in zip(self.mesh(), center))

    def half_grid_index(self, lam: float) -> int:
        """Return k with lam = -L + k h/2, or raise if lam is off the half-grid."""
        k = 2.0 * (lam + self.half_width) / self.spacing
        kr = round(k)
        if abs(k - kr) > _ALIGN_TOL * max(1.0, abs(k)):
            raise AlignmentError(f"plane {lam} is not on the half-grid (spacing/2 = {self.spacing / 2})")
        return int(kr)

    def half_grid_value(self, k: int) -> float:
        return -self.half_width + 0.5 * k * self.spacing

    def to_dict(self) -> dict:
        return {"dim": self.dim, "half_width": self.half_width,
                "points_per_dim": int(self.points_per_dim)}


@dataclass(frozen=True, eq=False)
class GridFunction:
    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=float, copy=True)
        if arr.size != self.spec.size:
            raise ShapeMismatchError(f"expected {self.spec.size} values, got {arr.size}")
        arr = arr.reshape(self.spec.shape)
        if not np.all(np.isfinite(arr)):
            raise DomainError("grid function values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_callable(cls, spec: GridSpec, func) -> "GridFunction":
        return cls(spec, func(*spec.mesh()))

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_positive(self) -> bool:
        return bool(np.all(self.values > 0))

    def require_positive(self, what: str = "function"):
        if not self.is_positive():
            raise DomainError(f"{what} must be strictly positive on the grid")

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.spec, values)

    def same_grid(self, other: "GridFunction"):
        if self.spec != other.spec:
            raise ShapeMismatchError(f"grid mismatch: {self.spec} vs {other.spec}")

    def __eq__(self, other):
        if not isinstance(other, GridFunction):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class HalfSpaceMask:
    """Grid points with x[axis] >= lam (the half-space Sigma_lambda)."""

    spec: GridSpec
    axis: int
    lam: float
    selection: np.ndarray = field(repr=False)

    def complement(self) -> np.ndarray:
        return ~self.selection

    @property
    def count(self) -> int:
        return int(self.selection.sum())


def _axis_selection(spec: GridSpec, axis: int, keep_1d: np.ndarray) -> np.ndarray:
    shape = [1] * spec.dim
    shape[axis] = spec.points_per_dim
    return np.broadcast_to(keep_1d.reshape(shape), spec.shape).copy()


def sigma_mask(spec: GridSpec, axis: int, lam: float) -> HalfSpaceMask:
    if not 0 <= axis < spec.dim:
        raise DomainError(f"axis {axis} out of range for dim {spec.dim}")
    x = spec.coords()
    keep = x >= lam - _ALIGN_TOL * spec.spacing
    sel = _axis_selection(spec, axis, keep)
    sel.setflags(write=False)
    return HalfSpaceMask(spec, axis, float(lam), sel)


def half_torus_mask(spec: GridSpec, axis: int, lam: float) -> np.ndarray:
    """Points between the plane lam and its periodic partner lam + L.

    Reflection about x[axis] = lam on the torus of period 2L also fixes the plane
    lam + L; this is the half of the torus that the reflection maps onto the other.
    For lam < 0 it is {lam <= x[axis] < lam + L}.
    """
    period = 2.0 * spec.half_width
    d = np.mod(spec.coords() - lam + _ALIGN_TOL * spec.spacing, period)
    keep = d < spec.half_width
    return _axis_selection(spec, axis, keep)


def _as_selection(f: GridFunction, mask) -> np.ndarray | None:
    if mask is None:
        return None
    if isinstance(mask, HalfSpaceMask):
        if mask.spec != f.spec:
            raise ShapeMismatchError("mask and function live on different grids")
        return mask.selection
    sel = np.asarray(mask, dtype=bool)
    if sel.shape != f.spec.shape:
        raise ShapeMismatchError("mask shape does not match the grid")
    return sel


def lp_norm(f: GridFunction, p: float, mask=None) -> float:
    """Riemann-sum L^p norm, (sum |f|^p h^n)^(1/p); p = inf gives the max."""
    if not p >= 1:
        raise DomainError(f"L^p norms need p >= 1, got {p}")
    sel = _as_selection(f, mask)
    vals = np.abs(f.values if sel is None else f.values[sel])
    if vals.size == 0:
        return 0.0
    if math.isinf(p):
        return float(vals.max())
    peak = vals.max()
    if peak == 0:
        return 0.0
    # Scale by the peak to avoid overflow for large p.
    s = np.sum((vals / peak) ** p) * f.spec.cell_volume
    return float(peak * s ** (1.0 / p))


def reflection_indices(spec: GridSpec, lam: float) -> np.ndarray:
    """Index map i -> index of 2 lam - x_i, wrapped periodically."""
    k = spec.half_grid_index(lam)
    return np.mod(k - np.arange(spec.points_per_dim), spec.points_per_dim)


def reflect(f: GridFunction, axis: int, lam: float) -> GridFunction:
    """u_lambda(x) = u(x^lambda), x^lambda = x with x[axis] -> 2 lam - x[axis]."""
    if not 0 <= axis < f.spec.dim:
        raise DomainError(f"axis {axis} out of range for dim {f.spec.dim}")
    idx = reflection_indices(f.spec, lam)
    return f.with_values(np.take(f.values, idx, axis=axis))


def write_gridfunction(path, f: GridFunction, metadata: dict | None = None):
    """Write the text format: magic line, JSON header line, one value per line."""
    header = dict(metadata or {})
    header.update(f.spec.to_dict())
    header["count"] = f.spec.size
    path = Path(path)
    with path.open("w") as fh:
        fh.write(FILE_MAGIC + "\n")
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        np.savetxt(fh, f.flat, fmt="%.17g")


def read_gridfunction(path) -> tuple[GridFunction, dict]:
    path = Path(path)
    try:
        with path.open() as fh:
            magic = fh.readline().rstrip("\n")
            header_line = fh.readline()
            body = fh.read()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    if magic != FILE_MAGIC:
        raise SchemaError(f"{path}: not a grid function file (bad magic line)")
    if not header_line.startswith("# "):
        raise SchemaError(f"{path}: missing header line")
    try:
        header = json.loads(header_line[2:])
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: header is not valid JSON") from exc
    missing = {"dim", "half_width", "points_per_dim", "count"} - set(header)
    if missing:
        raise SchemaError(f"{path}: header lacks {sorted(missing)}")
    try:
        spec = GridSpec(int(header["dim"]), float(header["half_width"]),
                        int(header["points_per_dim"]))
        values = np.array(body.split(), dtype=float)
    except (ValueError, DomainError) as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    if values.size != header["count"] or values.size != spec.size:
        raise SchemaError(f"{path}: expected {spec.size} values, found {values.size}")
    try:
        f = GridFunction(spec, values)
    except DomainError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    return f, header
