import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from besselsym.errors import DomainError, QuadratureError, SingularityError
from besselsym.grid import GridSpec
from besselsym.kernel import (KernelParams, QuadratureConfig, bessel_kernel, bessel_kernel_closed_form,
                              bessel_kernel_estimate, bessel_symbol, cell_average, gamma_alpha,
                              kernel_mass, kernel_values)

alphas = st.floats(0.3, 4.0)
dims = st.sampled_from([1, 2, 3])


@pytest.mark.parametrize("alpha, expected", [(2, 4 * math.pi), (1, 2 * math.pi), (4, 16 * math.pi ** 2)])
def test_gamma_alpha_values(alpha, expected):
    assert gamma_alpha(alpha) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("alpha", [0.0, -1.0])
def test_gamma_alpha_rejects_nonpositive(alpha):
    with pytest.raises(DomainError):
        gamma_alpha(alpha)


def test_params_validation():
    with pytest.raises(DomainError):
        KernelParams(0.0, 1)
    with pytest.raises(DomainError):
        KernelParams(1.0, 4)
    with pytest.raises(DomainError):
        QuadratureConfig(rel_tol=0)
    with pytest.raises(DomainError):
        QuadratureConfig(t_min=1, t_max=0)


@pytest.mark.parametrize("dim, r, expected", [
    (1, 0.0, 0.5),
    (3, 1.0, math.exp(-1) / (4 * math.pi)),
    (1, 3.0, 0.5 * math.exp(-3)),
])
def test_kernel_examples(dim, r, expected):
    assert bessel_kernel(KernelParams(2.0, dim), r) == pytest.approx(expected, rel=1e-10)


def test_laplace_closed_form_by_fourier_inversion():
    # The 1-D closed form 1/2 e^-|x| transforms back to the symbol.
    for xi in (0.0, 0.05, 1 / (2 * math.pi), 0.7):
        w = 2 * math.pi * xi
        val = 2 * integrate.quad(lambda x: 0.5 * math.exp(-x), 0, np.inf, weight="cos", wvar=w)[0] \
            if w else 2 * integrate.quad(lambda x: 0.5 * math.exp(-x), 0, np.inf)[0]
        assert val == pytest.approx(1 / (1 + w * w), rel=1e-10)


def test_yukawa_closed_form_by_fourier_inversion():
    # 3-D radial transform: (2/rho) int g(r) r sin(2 pi rho r) dr.
    for rho in (0.05, 1 / (2 * math.pi), 0.4):
        w = 2 * math.pi * rho
        val = 2 / rho * integrate.quad(lambda r: math.exp(-r) / (4 * math.pi), 0, np.inf,
                                       weight="sin", wvar=w)[0]
        assert val == pytest.approx(1 / (1 + w * w), rel=1e-10)


def test_singular_origin_raises():
    with pytest.raises(SingularityError):
        bessel_kernel(KernelParams(1.0, 1), 0.0)
    with pytest.raises(SingularityError):
        kernel_values(KernelParams(2.0, 3), [0.0, 1.0])
    with pytest.raises(DomainError):
        bessel_kernel(KernelParams(2.0, 1), -1.0)


def test_origin_value_when_regular():
    # alpha > n: g(0) = Gamma((alpha-n)/2) / (2^n pi^(n/2) Gamma(alpha/2))
    alpha, n = 3.7, 2
    expected = math.gamma((alpha - n) / 2) / (2 ** n * math.pi ** (n / 2) * math.gamma(alpha / 2))
    assert bessel_kernel(KernelParams(alpha, n), 0.0) == pytest.approx(expected, rel=1e-10)
    assert float(kernel_values(KernelParams(alpha, n), [0.0])[0]) == pytest.approx(expected, rel=1e-10)


def test_quadrature_failure_reports_estimate():
    tight = QuadratureConfig(rel_tol=1e-15, abs_tol=1e-300, max_subdivisions=2)
    with pytest.raises(QuadratureError) as info:
        bessel_kernel_estimate(KernelParams(2.0, 1), 1.0, tight)
    assert info.value.error_estimate > 0


@given(alphas, dims, st.floats(0.05, 20.0))
def test_matches_modified_bessel_closed_form(alpha, dim, r):
    p = KernelParams(alpha, dim)
    exact = bessel_kernel_closed_form(alpha, dim, r)
    assert bessel_kernel(p, r) == pytest.approx(exact, rel=1e-8)
    assert float(kernel_values(p, [r])[0]) == pytest.approx(exact, rel=1e-8)


@given(alphas, dims, st.floats(0.01, 15.0), st.floats(1.001, 3.0))
def test_strictly_decreasing_in_radius(alpha, dim, r, factor):
    p = KernelParams(alpha, dim)
    assert bessel_kernel(p, r) > bessel_kernel(p, r * factor) > 0


@given(alphas, dims)
def test_vectorized_values_are_monotone(alpha, dim):
    r = np.linspace(0.01, 30.0, 500)
    vals = kernel_values(KernelParams(alpha, dim), r)
    assert np.all(vals > 0)
    assert np.all(np.diff(vals) <= 0)


@pytest.mark.parametrize("alpha, dim", [(2, 1), (0.5, 3), (3.7, 2), (1.0, 1), (1.0, 2)])
def test_kernel_mass_is_one(alpha, dim):
    assert kernel_mass(KernelParams(alpha, dim)) == pytest.approx(1.0, abs=1e-6)


def test_symbol_examples():
    assert bessel_symbol(KernelParams(3.3, 2), [0.0, 0.0]) == 1.0
    assert bessel_symbol(KernelParams(2.0, 1), 1 / (2 * math.pi)) == pytest.approx(0.5, rel=1e-15)
    assert bessel_symbol(KernelParams(1.0, 2), [1 / (2 * math.pi), 0.0]) == pytest.approx(2 ** -0.5, rel=1e-15)


@given(alphas, st.floats(0.0, 50.0), st.floats(1e-6, 5.0))
def test_symbol_range_and_monotone(alpha, xi, dxi):
    p = KernelParams(alpha, 1)
    a, b = bessel_symbol(p, xi), bessel_symbol(p, xi + dxi)
    assert 0 < b < a <= 1


@pytest.mark.parametrize("alpha, tol", [(3.0, 1e-5), (2.0, 1e-3), (1.5, 1e-2)])
def test_sampled_kernel_transform_matches_symbol(alpha, tol):
    # Riemann-sum transform of the sampled kernel; the error reflects kernel smoothness.
    spec = GridSpec(1, 16.0, 512)
    p = KernelParams(alpha, 1)
    g = kernel_values(p, np.abs(spec.coords()))
    transform = np.real(np.fft.fft(np.fft.ifftshift(g))) * spec.spacing
    xi = np.fft.fftfreq(512, spec.spacing)
    assert np.abs(transform - bessel_symbol(p, xi[:, None]))[:40].max() < tol


def _polar_cell_average(alpha, h):
    def inner(t):
        return integrate.quad(lambda r: bessel_kernel_closed_form(alpha, 2, r) * r, 0,
                              0.5 * h / math.cos(t), epsabs=1e-14, epsrel=1e-11)[0]
    return 8 * integrate.quad(inner, 0, math.pi / 4, epsabs=1e-13, epsrel=1e-11)[0] / h ** 2


@pytest.mark.parametrize("alpha", [1.5, 2.0, 0.7])
def test_cell_average_matches_polar_integration(alpha):
    h = 0.25
    assert cell_average(KernelParams(alpha, 2), h) == pytest.approx(_polar_cell_average(alpha, h), rel=1e-10)


def test_cell_average_one_dimension():
    h = 0.25
    exact = 2 * integrate.quad(lambda r: bessel_kernel_closed_form(1.0, 1, r), 0, h / 2,
                               epsabs=1e-14, epsrel=1e-12)[0] / h
    assert cell_average(KernelParams(1.0, 1), h) == pytest.approx(exact, rel=1e-10)
