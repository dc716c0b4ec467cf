import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from besselsym.errors import AlignmentError, DomainError, SchemaError, ShapeMismatchError
from besselsym.grid import (FILE_MAGIC, GridFunction, GridSpec, half_torus_mask, lp_norm,
                            read_gridfunction, reflect, sigma_mask, write_gridfunction)

SPEC = GridSpec(1, 2.0, 8)
finite = st.floats(-1e3, 1e3, allow_nan=False)


def spec_and_values(dim=1, n=8):
    spec = GridSpec(dim, 2.0, n)
    return st.tuples(st.just(spec), arrays(float, spec.shape, elements=finite))


def test_spec_geometry():
    assert SPEC.spacing == 0.5
    np.testing.assert_array_equal(SPEC.coords(), [-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5])
    assert SPEC.coords()[SPEC.center_index] == 0.0
    assert GridSpec(3, 1.0, 4).size == 64


@pytest.mark.parametrize("args", [(4, 1.0, 8), (1, 0.0, 8), (1, 1.0, 7), (1, 1.0, 0), (1, math.inf, 8)])
def test_spec_validation(args):
    with pytest.raises(DomainError):
        GridSpec(*args)


def test_gridfunction_is_immutable_and_finite():
    f = GridFunction(SPEC, np.ones(8))
    with pytest.raises(ValueError):
        f.values[0] = 2.0
    with pytest.raises(DomainError):
        GridFunction(SPEC, [np.nan] + [1.0] * 7)
    with pytest.raises(ShapeMismatchError):
        GridFunction(SPEC, np.ones(7))


def test_lp_norm_examples():
    assert lp_norm(GridFunction(SPEC, np.ones(8)), 1) == pytest.approx(4.0)
    assert lp_norm(GridFunction(SPEC, np.zeros(8)), 3) == 0.0
    spec = GridSpec(1, 2.0, 64)
    indicator = GridFunction(spec, (spec.coords() >= 0).astype(float))
    assert abs(lp_norm(indicator, 1) - 2.0) <= spec.spacing
    with pytest.raises(DomainError):
        lp_norm(indicator, 0.5)


def test_lp_norm_on_mask():
    f = GridFunction(SPEC, np.arange(8.0))
    mask = sigma_mask(SPEC, 0, 0.0)
    assert lp_norm(f, math.inf, mask) == 7.0
    assert lp_norm(f, 1, mask) == pytest.approx((4 + 5 + 6 + 7) * 0.5)
    assert lp_norm(GridFunction(SPEC, [1.0] * 4 + [0.0] * 4), 2, mask) == 0.0


@given(spec_and_values(), st.floats(-50, 50), st.sampled_from([1, 1.5, 2, 4, math.inf]))
def test_lp_norm_homogeneous(sv, c, p):
    spec, vals = sv
    f = GridFunction(spec, vals)
    assert lp_norm(f.with_values(c * vals), p) == pytest.approx(abs(c) * lp_norm(f, p), rel=1e-12, abs=1e-300)


def test_sigma_mask_examples():
    assert sigma_mask(SPEC, 0, -2.0).count == 8
    last = sigma_mask(SPEC, 0, 2.0 - 0.5 + 1e-3)
    assert last.count == 0
    assert sigma_mask(SPEC, 0, 1.5).count == 1
    np.testing.assert_array_equal(SPEC.coords()[sigma_mask(SPEC, 0, 0.0).selection], [0, 0.5, 1.0, 1.5])


@given(st.integers(0, 15), st.integers(0, 15), st.sampled_from([1, 2, 3]))
def test_masks_partition_and_nest(k1, k2, dim):
    spec = GridSpec(dim, 2.0, 8)
    lo, hi = sorted((spec.half_grid_value(k1), spec.half_grid_value(k2)))
    for axis in range(dim):
        m = sigma_mask(spec, axis, lo)
        assert np.all(m.selection | m.complement()) and not np.any(m.selection & m.complement())
        assert np.all(sigma_mask(spec, axis, hi).selection <= m.selection)


def test_reflect_examples():
    spec = GridSpec(1, 4.0, 16)
    x = spec.coords()
    even = GridFunction(spec, np.cos(x) * np.exp(-x * x))
    # x = -4 reflects to x = 4, i.e. back onto -4 on the torus; the rest is exact
    np.testing.assert_array_equal(reflect(even, 0, 0.0).values, even.values)
    spike = GridFunction(spec, (np.abs(x - 1) < 1e-12).astype(float))
    assert x[np.argmax(reflect(spike, 0, 0.0).values)] == -1.0


def test_reflect_rejects_off_lattice_plane():
    with pytest.raises(AlignmentError):
        reflect(GridFunction(SPEC, np.ones(8)), 0, 0.1)
    with pytest.raises(DomainError):
        reflect(GridFunction(SPEC, np.ones(8)), 1, 0.0)


@given(spec_and_values(dim=2, n=6), st.integers(0, 11), st.sampled_from([0, 1]))
def test_reflect_involution_preserves_norms(sv, k, axis):
    spec, vals = sv
    f = GridFunction(spec, vals)
    lam = spec.half_grid_value(k)
    once = reflect(f, axis, lam)
    assert reflect(once, axis, lam) == f
    for p in (1, 2, math.inf):
        assert lp_norm(once, p) == pytest.approx(lp_norm(f, p), rel=1e-12, abs=1e-300)


def test_half_torus_mask():
    spec = GridSpec(1, 4.0, 16)
    x = spec.coords()
    np.testing.assert_array_equal(half_torus_mask(spec, 0, -1.0), (x >= -1.0) & (x < 3.0))
    # for a plane in the upper half the band wraps around
    np.testing.assert_array_equal(half_torus_mask(spec, 0, 2.0), (x >= 2.0) | (x < -2.0))


@given(spec_and_values(dim=2, n=4))
def test_file_round_trip_is_exact(tmp_path_factory, sv):
    spec, vals = sv
    f = GridFunction(spec, vals)
    path = tmp_path_factory.mktemp("rt") / "f.txt"
    write_gridfunction(path, f, {"alpha": 1.5})
    g, header = read_gridfunction(path)
    assert g == f
    assert header["alpha"] == 1.5 and header["count"] == 16


def test_file_schema_errors(tmp_path):
    f = GridFunction(SPEC, np.ones(8))
    good = tmp_path / "good.txt"
    write_gridfunction(good, f)
    lines = good.read_text().splitlines()
    cases = {
        "magic": ["# other"] + lines[1:],
        "header": [lines[0], "not json"] + lines[2:],
        "json": [lines[0], "# {broken"] + lines[2:],
        "count": lines[:-1],
        "values": lines[:2] + ["abc"] + lines[3:],
        "keys": [lines[0], '# {"dim": 1}'] + lines[2:],
    }
    assert lines[0] == FILE_MAGIC
    for name, content in cases.items():
        path = tmp_path / f"{name}.txt"
        path.write_text("\n".join(content) + "\n")
        with pytest.raises(SchemaError):
            read_gridfunction(path)
    with pytest.raises(SchemaError):
        read_gridfunction(tmp_path / "missing.txt")
