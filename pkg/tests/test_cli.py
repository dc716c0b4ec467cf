import csv
import json

import numpy as np
import pytest

from besselsym.cli import main
from besselsym.config import load_preset
from besselsym.grid import GridFunction, read_gridfunction, write_gridfunction


def run(*argv):
    return main([*argv, "--quiet"])


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    out = tmp_path_factory.mktemp("solve")
    assert run("solve", "--preset", "small-oracle", "--out", str(out)) == 0
    return out


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_solve_writes_artifacts(solved):
    manifest = json.loads((solved / "manifest.json").read_text())
    assert manifest["status"] == "converged" and manifest["residual"] <= 1e-8
    assert manifest["config"] == load_preset("small-oracle").to_dict()
    assert set(manifest["versions"]) == {"besselsym", "numpy", "scipy", "python"}
    u, header = read_gridfunction(solved / "solution.txt")
    assert u.spec.points_per_dim == 256 and header["alpha"] == 2.0
    rows = read_csv(solved / "trace.csv")
    assert len(rows) == manifest["iterations"]


def test_solution_file_round_trip_is_exact(solved, tmp_path):
    u, header = read_gridfunction(solved / "solution.txt")
    write_gridfunction(tmp_path / "copy.txt", u, {k: v for k, v in header.items()
                                                    if k not in ("dim", "half_width", "points_per_dim", "count")})
    assert (tmp_path / "copy.txt").read_bytes() == (solved / "solution.txt").read_bytes()


def test_malformed_config_exits_2_without_artifacts(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"schema_version": 1, "problem": {"alpha": 2.0}}))
    out = tmp_path / "out"
    assert run("solve", "--config", str(cfg), "--out", str(out)) == 2
    assert not out.exists()
    assert json.loads(capsys.readouterr().err)["error"] == "ConfigError"
    assert run("solve", "--out", str(out)) == 2
    assert run("solve", "--preset", "nope", "--out", str(out)) == 2


def test_solver_failure_exits_3_with_trace(tmp_path):
    doc = load_preset("small-oracle").to_dict()
    doc["solver"]["max_iters"] = 1
    cfg = tmp_path / "one.json"
    cfg.write_text(json.dumps(doc))
    out = tmp_path / "out"
    assert run("solve", "--config", str(cfg), "--out", str(out)) == 3
    err = json.loads((out / "error.json").read_text())
    assert err["error"] == "SolverNotConverged" and err["iterations"] == 1
    assert len(read_csv(out / "trace.csv")) == 1
    assert not (out / "solution.txt").exists()


def test_verify_passes_on_solution(solved, tmp_path):
    out = tmp_path / "v"
    assert run("verify", str(solved / "solution.txt"), "--preset", "small-oracle", "--out", str(out)) == 0
    summary = json.loads((out / "verify_summary.json").read_text())
    assert summary["passed"]
    assert set(summary["checks"]) == {"residual", "symmetry", "moving_plane", "contraction",
                                      "reflection_identity", "kernel_reflection", "operator"}
    for name in summary["checks"]:
        assert json.loads((out / f"{name}.json").read_text())["passed"]
    assert read_csv(out / "moving_plane.csv")


def test_verify_is_deterministic(solved, tmp_path):
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        run("verify", str(solved / "solution.txt"), "--preset", "small-oracle", "--out", str(out), "--seed", "3")
    names = sorted(p.name for p in outs[0].iterdir())
    assert names == sorted(p.name for p in outs[1].iterdir())
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name


def test_verify_asymmetric_input_exits_1(tmp_path):
    spec = load_preset("small-oracle").grid
    x = spec.coords()
    path = tmp_path / "bumps.txt"
    write_gridfunction(path, GridFunction(spec, 1 / np.cosh(x) + 0.2 / np.cosh(x - 4)))
    out = tmp_path / "v"
    assert run("verify", str(path), "--preset", "small-oracle", "--out", str(out)) == 1
    sym = json.loads((out / "symmetry.json").read_text())
    assert not sym["passed"] and sym["asymmetry"] > 0.05


def test_verify_schema_errors(solved, tmp_path):
    sol = str(solved / "solution.txt")
    assert run("verify", sol, "--preset", "frac1d", "--out", str(tmp_path / "a")) == 2
    assert run("verify", sol, "--preset", "iso2d", "--out", str(tmp_path / "b")) == 2
    assert run("verify", str(tmp_path / "missing.txt"), "--preset", "sech1d", "--out", str(tmp_path / "c")) == 2


def test_kernel_table_rows(tmp_path, capsys):
    assert run("kernel-table", "--alpha", "2", "--dim", "1", "--radii", "0.5,1,3") == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "alpha,dim,radius,value,quad_error"
    rows = list(csv.DictReader(lines))
    values = [float(r["value"]) for r in rows if r["radius"] not in ("mass",)][:3]
    np.testing.assert_allclose(values, 0.5 * np.exp(-np.array([0.5, 1.0, 3.0])), rtol=1e-10)
    out = tmp_path / "kt"
    assert run("kernel-table", "--alpha", "1.5", "--dim", "2", "--count", "5", "--out", str(out)) == 0
    assert len(read_csv(out / "kernel_table.csv")) >= 5


def test_kernel_table_errors():
    assert run("kernel-table", "--alpha", "1", "--dim", "1", "--radii", "0") == 2
    assert run("kernel-table", "--alpha", "1", "--dim", "4", "--radii", "1") == 2
    assert run("kernel-table", "--dim", "1") == 2
    assert run("kernel-table", "--alpha", "1", "--dim", "1", "--radii", "a,b") == 2


def test_sweep(solved, tmp_path):
    out = tmp_path / "s"
    code = run("sweep", "--preset", "small-oracle", "--solution", str(solved / "solution.txt"),
               "--lambda-min", "-6", "--lambda-max", "3", "--out", str(out))
    assert code == 0
    rows = read_csv(out / "sweep.csv")
    lams = [float(r["lambda"]) for r in rows]
    assert lams == sorted(lams) and -6 <= lams[0] and lams[-1] <= 3
    doc = json.loads((out / "sweep.json").read_text())
    assert doc["contraction_monotone"]
    assert run("sweep", "--preset", "small-oracle", "--solution", str(solved / "solution.txt"),
               "--lambda-min", "1.01", "--lambda-max", "1.02", "--out", str(out)) == 2
