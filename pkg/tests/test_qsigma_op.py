import math

import numpy as np
import pytest
from scipy import integrate as sp_integrate

from config import VerifyConfig
from errors import ConfigError, UnsupportedFunctionError
from services.covariance import chi
from services.processes import path_generator
from services.qsigma_op import (
    ExponentialProbe,
    GaussianBump,
    HermiteFunction,
    HermiteFunctionBasis,
    Indicator,
    MollifiedIndicator,
    WindowedSinusoid,
    adjoint_kernel,
    bilinear_form_check,
    gaussian_battery,
    inner_product_check,
    kernel_nontriviality,
    mollified_indicator,
    norm_identity_check,
    q_sigma_coefficients,
    weighted_bound_check,
)
from services.spectral_measures import dirac_measure, generate_spectrum, power_density

FUNCTIONS = [
    GaussianBump(2.0, 0.3),
    WindowedSinusoid(1.5, -0.2, 3.0),
    HermiteFunction(3),
    MollifiedIndicator(0.8, 4),
    Indicator(-0.6),
]


@pytest.fixture(scope="module")
def lambda2_512():
    return generate_spectrum(2, 512, with_tail_bound=False)


def _numeric_fourier(psi, u):
    lo, hi = psi.window()
    re, _ = sp_integrate.quad(lambda x: psi.value(np.array([x]))[0] * math.cos(u * x), lo, hi,
                          limit=400, epsabs=1e-13, epsrel=1e-12)
    im, _ = sp_integrate.quad(lambda x: psi.value(np.array([x]))[0] * math.sin(u * x), lo, hi,
                          limit=400, epsabs=1e-13, epsrel=1e-12)
    return complex(re, im)


def test_hermite_basis_is_orthonormal():
    basis = HermiteFunctionBasis(12)
    assert basis.orthonormality_error() < 1e-12
    assert basis(0, 0.0)[0] == pytest.approx(math.pi ** -0.25)
    with pytest.raises(ConfigError):
        basis(13, 0.0)


@pytest.mark.parametrize("psi", FUNCTIONS, ids=repr)
def test_closed_form_transforms(psi):
    for u in (0.0, 0.7, 2.5):
        assert psi.fourier(np.array([u]))[0] == pytest.approx(_numeric_fourier(psi, u), abs=1e-9)


def test_indicator_transform_is_chi():
    u = np.linspace(-3.0, 3.0, 13)
    np.testing.assert_allclose(Indicator(-0.6).fourier(u), chi(-0.6, u))
    assert Indicator(-0.6).value(np.array([-0.3]))[0] == -1.0
    assert MollifiedIndicator(1.2, 8).fourier(np.array([0.0]))[0] == pytest.approx(1.2)


@pytest.mark.parametrize("psi,order", [
    (GaussianBump(2.0, 0.3), 1), (GaussianBump(2.0, 0.3), 2),
    (WindowedSinusoid(1.5, -0.2, 3.0), 1), (WindowedSinusoid(1.5, -0.2, 3.0), 2),
    (HermiteFunction(3), 1), (HermiteFunction(3), 2),
    (MollifiedIndicator(0.8, 4), 1),
], ids=str)
def test_derivatives_match_finite_differences(psi, order):
    x = np.linspace(-1.5, 1.5, 7)
    if order == 1:
        h = 1e-6
        numeric = (psi.value(x + h) - psi.value(x - h)) / (2 * h)
        tol = 1e-7
    else:
        h = 1e-4
        numeric = (psi.value(x + h) - 2 * psi.value(x) + psi.value(x - h)) / h ** 2
        tol = 1e-5
    np.testing.assert_allclose(psi.derivative(x, order), numeric, atol=tol)


def test_unsupported_derivatives_and_probe_values():
    with pytest.raises(UnsupportedFunctionError):
        Indicator(1.0).derivative(np.zeros(1))
    with pytest.raises(UnsupportedFunctionError):
        MollifiedIndicator(1.0, 2).derivative(np.zeros(1), 2)
    with pytest.raises(UnsupportedFunctionError):
        ExponentialProbe(1.0).value(np.zeros(1))
    with pytest.raises(ConfigError):
        GaussianBump(a=0.0)


def test_l1_norms_and_scaling():
    bump = GaussianBump(1.0)
    assert bump.l1_norm() == pytest.approx(math.sqrt(math.pi), rel=1e-9)
    doubled = bump.scaled(2.0)
    assert doubled.l1_norm() == pytest.approx(2 * math.sqrt(math.pi), rel=1e-9)
    np.testing.assert_allclose(doubled.fourier(np.array([0.4])), 2 * bump.fourier(np.array([0.4])))


def test_gaussian_battery_is_reproducible():
    first = gaussian_battery(10, seed=3)
    assert first == gaussian_battery(10, seed=3)
    assert all(1.0 <= g.a <= 4.0 and abs(g.b) <= 1.5 for g in first)


def test_exponential_probe_recovers_basis_vector(sigma2):
    spec = generate_spectrum(2, 16)
    for k in (0, 5, 11):
        q = q_sigma_coefficients(ExponentialProbe(spec.frequencies[k]), spec, sigma2)
        expected = np.zeros(16)
        expected[k] = 1.0
        np.testing.assert_allclose(q, expected, atol=1e-12)


def test_probe_has_no_time_route(sigma2):
    with pytest.raises(UnsupportedFunctionError):
        q_sigma_coefficients(ExponentialProbe(0.0), generate_spectrum(2, 4), sigma2, method="time")
    with pytest.raises(ConfigError):
        q_sigma_coefficients(GaussianBump(), generate_spectrum(2, 4), sigma2, method="fft")


def test_cascade_and_time_routes_agree(sigma2):
    spec = generate_spectrum(2, 16)
    for psi in (GaussianBump(2.0, 0.3), HermiteFunction(2)):
        time = q_sigma_coefficients(psi, spec, sigma2, method="time")
        cascade = q_sigma_coefficients(psi, spec, sigma2, method="cascade")
        np.testing.assert_allclose(time, cascade, atol=1e-9)


def test_norm_identity(sigma2, lambda2_512):
    report = norm_identity_check(GaussianBump(2.0, 0.3), lambda2_512, sigma2, method="time")
    assert report.N == 512
    assert report.relative_error < 1e-4
    assert report.coefficient_norm2 <= report.spectral_norm2 * (1 + 1e-12)
    assert report.bound_holds


def test_norm_identity_on_gaussian_battery_at_configured_N(sigma2):
    v = VerifyConfig()
    spec = generate_spectrum(2, v.qsigma_N, with_tail_bound=False)
    reports = [norm_identity_check(psi, spec, sigma2, v.qsigma_N, method="time")
               for psi in gaussian_battery(v.qsigma_battery, v.seed)]
    assert len(reports) == 10
    assert max(r.relative_error for r in reports) <= v.qsigma_tol
    assert all(r.bound_holds for r in reports)


def test_norm_identity_shortfall_shrinks_with_N(sigma2, lambda2_512):
    battery = gaussian_battery(10, 0)
    at_256 = [norm_identity_check(psi, lambda2_512, sigma2, 256, method="time").relative_error for psi in battery]
    at_512 = [norm_identity_check(psi, lambda2_512, sigma2, 512, method="time").relative_error for psi in battery]
    assert max(at_256) > 1e-6
    assert max(at_512) < max(at_256)


def test_inner_product_identity(sigma2, lambda2_512):
    report = inner_product_check(GaussianBump(2.0, 0.0), GaussianBump(3.0, 0.5), lambda2_512, sigma2)
    assert report.deviation < 1e-4
    assert abs(report.spectral_form) > 0.1


def test_bilinear_forms_agree(sigma2):
    spec = generate_spectrum(2, 8)
    phi = path_generator(4, 0).standard_normal(8)
    report = bilinear_form_check(GaussianBump(1.5, 0.2), phi, spec, sigma2)
    assert report.max_deviation < 1e-8
    assert set(report.to_dict()) == {"coefficient_form", "time_form", "spectral_form", "max_deviation"}


def test_adjoint_kernel_is_nontrivial(sigma2):
    spec = generate_spectrum(2, 8)
    assert adjoint_kernel([1.0], 0.0, spec, sigma2)[0] == pytest.approx(1.0)
    witnesses = kernel_nontriviality([[1.0, 0.0, 0.0], [0.0, 0.5], [0.0, 0.0, 0.0, 1e-3]], spec, sigma2)
    assert all(found for _, _, found in witnesses)
    assert witnesses[1][0] == pytest.approx(0.5, rel=1e-5)


def test_mollified_indicator_converges_to_X(sigma2):
    spec = generate_spectrum(2, 16)
    report = mollified_indicator(0.5, 1, sigma2, spec, N=16, doublings=7)
    assert report.levels == [1, 2, 4, 8, 16, 32, 64, 128]
    # |chi_t| <= t and integral u^2 d sigma = 1/15 bound the gap by t / (15 n^2)
    assert report.limit_deviation < 1e-5
    assert report.monotone_from(1)
    assert report.increments[-1] < report.increments[0]

    zero = mollified_indicator(0.0, 2, sigma2, spec, N=16, doublings=2)
    assert zero.limit_deviation < 1e-14

    with pytest.raises(ConfigError):
        mollified_indicator(0.5, 1, dirac_measure(0.0), spec)
    with pytest.raises(ConfigError):
        mollified_indicator(0.5, 0, sigma2, spec)


def test_weighted_bound_for_growing_density():
    report = weighted_bound_check(GaussianBump(1.0), power_density(2.0), p=2)
    assert report.order == 2
    assert report.bound_holds
    assert report.spectral_norm2 > 0.0
