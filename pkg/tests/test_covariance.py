import math

import mpmath
import numpy as np
import pytest
from scipy.special import erf

from errors import IntegrabilityError
from services.covariance import (
    CovarianceKernel,
    chi,
    kolmogorov_bound_check,
    one_minus_cos_over_u2,
    sin_over_u,
)
from services.processes import path_generator
from services.spectral_measures import (
    atomic_measure,
    bridge_measure,
    dirac_measure,
    gaussian_density,
    integrate,
    ou_density,
    power_density,
)


def test_chi_small_u_branch_matches_high_precision():
    mpmath.mp.dps = 40
    t = 1.3
    for u in (0.0, 1e-9, 3e-5, 2e-4, 5.0):
        if u == 0.0:
            exact = complex(t)
        else:
            exact = complex((mpmath.exp(1j * mpmath.mpf(u) * t) - 1) / (1j * mpmath.mpf(u)))
        assert abs(chi(t, u) - exact) < 1e-14


def test_removable_singularity_kernels_are_continuous():
    t = 2.0
    u = np.array([-1e-4 * 1.0001, -1e-4 * 0.9999, 1e-4 * 0.9999, 1e-4 * 1.0001])
    for fn in (one_minus_cos_over_u2, sin_over_u):
        values = fn(t, u)
        assert np.ptp(values) < 1e-7
    assert one_minus_cos_over_u2(t, 0.0) == pytest.approx(t * t / 2)
    assert sin_over_u(t, 0.0) == pytest.approx(t)


def test_dirac_at_zero_gives_brownian_like_kernel():
    kernel = CovarianceKernel(dirac_measure(0.0))
    assert kernel.route == "atoms"
    assert kernel.variance(1.5) == pytest.approx(1.5 ** 2)
    assert kernel.kernel(0.7, 0.4) == pytest.approx(0.7 * 0.4)
    assert kernel.variance_rate(0.5) == pytest.approx(1.0)


def test_gaussian_density_time_route_matches_closed_form():
    kernel = CovarianceKernel(gaussian_density(1.0))
    assert kernel.route == "time"
    t = np.array([0.5, 1.0, 3.0, 9.5])
    a = math.sqrt(math.pi / 2.0)
    r = 2.0 * (t * a * erf(t / math.sqrt(2.0)) - (1.0 - np.exp(-0.5 * t * t)))
    np.testing.assert_allclose(kernel.variance(t), r, rtol=1e-10, atol=1e-13)
    np.testing.assert_allclose(kernel.variance_rate(t), 2.0 * a * erf(t / math.sqrt(2.0)), rtol=1e-10)
    assert kernel.variance(-1.0) == pytest.approx(kernel.variance(1.0))
    assert kernel.variance_rate(-1.0) == pytest.approx(-kernel.variance_rate(1.0))


def test_ou_frequency_route_matches_closed_form():
    theta, alpha = 1.5, 0.8
    kernel = CovarianceKernel(ou_density(theta, alpha))
    assert kernel.route == "frequency"
    for t in (0.1, 1.0, 4.0):
        expected = alpha ** 2 / theta * (1.0 - math.exp(-theta * t))
        assert kernel.variance(t) == pytest.approx(expected, abs=1e-8)
        rate = alpha ** 2 * math.exp(-theta * t)
        assert kernel.variance_rate(t) == pytest.approx(rate, abs=1e-7)


def test_aifs_rate_is_derivative_of_variance(sigma2):
    kernel = CovarianceKernel(sigma2)
    h = 1e-5
    for t in (0.2, 1.0, 6.0):
        numeric = (kernel.variance(t + h) - kernel.variance(t - h)) / (2 * h)
        assert kernel.variance_rate(t) == pytest.approx(numeric, rel=1e-7)
    # a probability measure gives r(t) <= t^2, with equality to first order near 0
    assert kernel.variance(0.01) == pytest.approx(1e-4, rel=1e-4)
    assert kernel.variance(5.0) <= 25.0


def test_kernel_matches_cascade_integral_of_chi(sigma2):
    kernel = CovarianceKernel(sigma2)
    direct = integrate(sigma2, lambda u: chi(1.0, u) * np.conj(chi(2.0, u))).value
    assert kernel.kernel(1.0, 2.0) == pytest.approx(direct.real, abs=1e-12)
    assert abs(direct.imag) < 1e-12


def test_diagonal_and_stationary_increments(sigma2):
    kernel = CovarianceKernel(sigma2)
    rng = path_generator(24, 0)
    t, s = rng.uniform(-5.0, 5.0, size=(2, 10))
    np.testing.assert_allclose(kernel.kernel(t, t), kernel.variance(t), atol=1e-13)
    for a, b in zip(t, s):
        increment = integrate(sigma2, lambda u: np.abs(chi(a, u) - chi(b, u)) ** 2).value
        assert kernel.variance(a - b) == pytest.approx(increment, rel=1e-10, abs=1e-12)
        assert kernel.variance(a) + kernel.variance(b) - 2 * kernel.kernel(a, b) == pytest.approx(increment, abs=1e-10)


def test_rate_matches_finite_differences_at_random_points(sigma2):
    kernel = CovarianceKernel(sigma2)
    rng = path_generator(23, 0)
    t = rng.uniform(0.05, 8.0, size=20) * rng.choice([-1.0, 1.0], size=20)
    h = 1e-5
    for ti in t:
        numeric = (kernel.variance(ti + h) - kernel.variance(ti - h)) / (2 * h)
        assert kernel.variance_rate(ti) == pytest.approx(numeric, rel=1e-7, abs=1e-8)


def test_gram_matrix_is_symmetric_positive(sigma2):
    times = np.linspace(0.0, 2.0, 21)
    G = CovarianceKernel(sigma2).gram_matrix(times)
    np.testing.assert_allclose(G, G.T, atol=1e-14)
    assert np.min(np.linalg.eigvalsh(G)) > -1e-10
    np.testing.assert_allclose(np.diag(G), CovarianceKernel(sigma2).variance(times), atol=1e-14)


def test_complex_kernel_for_one_sided_atoms():
    measure = atomic_measure([2.0], [1.0])
    kernel = CovarianceKernel(measure)
    z = kernel.kernel_complex(0.3, 0.9)
    assert z.real == pytest.approx(kernel.kernel(0.3, 0.9))
    assert abs(z.imag) > 1e-3


def test_kolmogorov_bound(sigma2):
    report = kolmogorov_bound_check(sigma2, 1.0)
    assert report.passes
    assert report.weakly_integrable
    assert report.empirical_C <= 1.0

    bridge = kolmogorov_bound_check(bridge_measure(2000), 2.0)
    assert bridge.passes
    assert not bridge.weakly_integrable
    assert bridge.empirical_C == pytest.approx(math.pi / 2.0, rel=1e-2)
    assert set(bridge.to_dict()) >= {"empirical_C", "supplied_C", "passes"}

    with pytest.raises(IntegrabilityError):
        kolmogorov_bound_check(power_density(2.0), 1.0)
