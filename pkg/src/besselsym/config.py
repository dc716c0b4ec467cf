"""Run configuration: one JSON document with an explicit schema version."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

from .errors import ConfigError, DomainError
from .grid import GridSpec
from .solver import ProblemParams, SolverConfig
from .verify import VerifyThresholds

SCHEMA_VERSION = 1
_TOP_KEYS = {"schema_version", "problem", "grid", "solver", "verify", "output", "seed"}
_VERIFY_EXTRA = {"axis": 0, "reflection_samples": 10_000}


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemParams
    grid: GridSpec
    solver: SolverConfig = SolverConfig()
    thresholds: VerifyThresholds = VerifyThresholds()
    axis: int = 0
    reflection_samples: int = 10_000
    output: str = "besselsym-out"
    seed: int = 0
    name: str = field(default="custom", compare=False)

    def to_dict(self) -> dict:
        verify = asdict(self.thresholds)
        verify.update(axis=self.axis, reflection_samples=self.reflection_samples)
        solver = asdict(self.solver)
        solver["init_center"] = list(solver["init_center"])
        grid = self.grid.to_dict()
        del grid["dim"]
        return {"schema_version": SCHEMA_VERSION, "problem": asdict(self.problem), "grid": grid,
                "solver": solver, "verify": verify, "output": self.output, "seed": self.seed}


def _section(doc: dict, key: str, allowed) -> dict:
    part = doc.get(key, {})
    if not isinstance(part, dict):
        raise ConfigError(f"'{key}' must be an object")
    unknown = set(part) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in '{key}': {sorted(unknown)}")
    return part


def config_from_dict(doc: dict, name: str = "custom") -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {doc.get('schema_version')!r}")
    for key in ("problem", "grid"):
        if key not in doc:
            raise ConfigError(f"missing section '{key}'")
    try:
        prob = _section(doc, "problem", [f.name for f in fields(ProblemParams)])
        problem = ProblemParams(float(prob["alpha"]), float(prob["beta"]), int(prob["dim"]),
                                float(prob["q_exponent"]))
        grid_doc = _section(doc, "grid", ["dim", "half_width", "points_per_dim"])
        if "dim" in grid_doc and int(grid_doc["dim"]) != problem.dim:
            raise ConfigError("grid.dim disagrees with problem.dim")
        n = grid_doc["points_per_dim"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise ConfigError("grid.points_per_dim must be an integer")
        grid = GridSpec(problem.dim, float(grid_doc["half_width"]), n)
        solver = SolverConfig(**_section(doc, "solver", [f.name for f in fields(SolverConfig)]))
        ver = dict(_section(doc, "verify", [f.name for f in fields(VerifyThresholds)] + list(_VERIFY_EXTRA)))
        axis = int(ver.pop("axis", 0))
        samples = int(ver.pop("reflection_samples", 10_000))
        thresholds = VerifyThresholds(**{k: float(v) for k, v in ver.items()})
        seed = doc.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError("seed must be an integer")
        output = doc.get("output", "besselsym-out")
        if not isinstance(output, str):
            raise ConfigError("output must be a string path")
    except KeyError as exc:
        raise ConfigError(f"missing key {exc}") from exc
    except (TypeError, ValueError, DomainError) as exc:
        raise ConfigError(str(exc)) from exc
    if not 0 <= axis < problem.dim:
        raise ConfigError(f"verify.axis {axis} out of range")
    if samples < 1:
        raise ConfigError("verify.reflection_samples must be positive")
    return RunConfig(problem, grid, solver, thresholds, axis, samples, output, seed, name)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return config_from_dict(doc, path.stem)


def preset_names() -> list[str]:
    root = resources.files("besselsym") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> RunConfig:
    if name not in preset_names():
        raise ConfigError(f"unknown preset {name!r}; choose from {preset_names()}")
    text = (resources.files("besselsym") / "presets" / f"{name}.json").read_text()
    return config_from_dict(json.loads(text), name)
