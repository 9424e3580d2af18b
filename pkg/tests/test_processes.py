import math

import mpmath
import numpy as np
import pytest

from errors import ConfigError, SpectralPairError
from models.paths import PathKind
from services.covariance import CovarianceKernel
from services.processes import (
    bridge_shape_report,
    brownian_bridge_process,
    build_W,
    build_X,
    derivative_bound,
    derivative_check,
    ensemble_summary,
    first_chaos_norm,
    h_representation,
    ou_decay_report,
    ou_process,
    path_generator,
    sample_covariance,
    sample_paths,
    standard_draws,
)
from services.spectral_measures import dirac_measure, generate_spectrum


def test_build_X_matches_direct_integral(sigma2):
    spec = generate_spectrum(2, 8)
    times = np.array([0.0, 0.7, -1.2])
    X = build_X(sigma2, spec, times, deficit_threshold=None)
    assert X.kind is PathKind.X
    assert X.coeffs.shape == (3, 8)
    np.testing.assert_array_equal(X.coeffs[0], 0.0)
    mpmath.mp.dps = 25
    for n in (0, 1, 5):
        lam = spec.frequencies[n]
        f = lambda y: mpmath.fprod(mpmath.cos((y - lam) / 4 ** k) for k in range(1, 40))
        for i, t in ((1, 0.7), (2, -1.2)):
            exact = float(mpmath.quad(f, [0, t]))
            assert X.coeffs[i, n] == pytest.approx(exact, abs=1e-12)


def test_truncated_variance_is_below_r(sigma2, lambda2):
    times = np.linspace(0.0, 2.0, 9)
    X = build_X(sigma2, lambda2, times)
    r = CovarianceKernel(sigma2).variance(times)
    gap = r - X.variances()
    assert np.all(gap > -1e-12)
    assert np.max(gap) < 1e-3


def test_W_variance_plus_deficit_is_one(sigma2, lambda2):
    W = build_W(sigma2, lambda2, np.linspace(-5.0, 5.0, 21))
    assert W.kind is PathKind.W
    np.testing.assert_allclose(W.variances() + W.deficits, 1.0, atol=1e-12)


def test_short_spectrum_is_rejected(sigma2):
    with pytest.raises(SpectralPairError) as info:
        build_X(sigma2, generate_spectrum(2, 1), [5.0])
    assert info.value.deficits and info.value.deficits[0] > 0.5
    # the threshold can be disabled for exploratory use
    build_X(sigma2, generate_spectrum(2, 1), [5.0], deficit_threshold=None)


def test_spectrum_required_for_continuous_measures(sigma2):
    with pytest.raises(ConfigError):
        build_X(sigma2, None, [1.0])


def test_atomic_paths_reproduce_kernel():
    measure = dirac_measure(1.0)
    times = np.array([0.0, 0.5, 2.0])
    X = build_X(measure, None, times)
    W = build_W(measure, None, times)
    assert X.N == 2
    np.testing.assert_allclose(X.variances(), 2.0 * (1.0 - np.cos(times)), atol=1e-14)
    np.testing.assert_allclose(W.variances(), 1.0)
    K = CovarianceKernel(measure).kernel(0.5, 2.0)
    assert float(np.dot(X.at(0.5), X.at(2.0))) == pytest.approx(K)


def test_draws_depend_only_on_seed_and_path_index():
    a = standard_draws(5, 0, 4, 6)
    b = standard_draws(5, 2, 4, 6)
    np.testing.assert_array_equal(a[2:], b)
    np.testing.assert_array_equal(a[3], path_generator(5, 3).standard_normal(6))
    assert not np.array_equal(a[0], standard_draws(6, 0, 1, 6)[0])


def test_sampling_is_thread_count_invariant(sigma2):
    X = build_X(sigma2, generate_spectrum(2, 16), np.linspace(0.0, 1.0, 5))
    one = sample_paths(X, 1100, seed=42, threads=1)
    three = sample_paths(X, 1100, seed=42, threads=3)
    np.testing.assert_array_equal(one.values, three.values)
    np.testing.assert_array_equal(one.draws, three.draws)
    with pytest.raises(ConfigError):
        sample_paths(X, 0, seed=42)


def test_ensemble_moments_match_kernel(sigma2):
    times = np.linspace(0.0, 1.0, 6)
    X = build_X(sigma2, generate_spectrum(2, 32), times)
    ens = sample_paths(X, 4000, seed=20240601)
    summary = ensemble_summary(ens)
    assert set(summary) == {"t", "mean", "var", "stderr"}
    assert np.all(np.abs(ens.mean()[1:]) < 5 * ens.stderr()[1:])
    r = X.variances()
    se_var = math.sqrt(2.0 / (ens.M - 1)) * r[1:]
    assert np.all(np.abs(ens.var()[1:] - r[1:]) < 5 * se_var)
    kernel = CovarianceKernel(sigma2)
    cov, se = sample_covariance(ens, 2, 5)
    assert abs(cov - kernel.kernel(times[2], times[5])) < 5 * se


def test_lipschitz_and_derivative_quotient(sigma2, lambda2):
    rng = path_generator(3, 0)
    t, s = rng.uniform(-2.0, 2.0, size=(2, 20))
    X = build_X(sigma2, lambda2, np.concatenate([t, s]))
    W = build_W(sigma2, lambda2, np.concatenate([t, s]))
    for a, b in zip(t, s):
        assert np.linalg.norm(X.at(a) - X.at(b)) <= abs(a - b) + 1e-12
        assert derivative_check(X, W, a, b) <= derivative_bound(a, b) + 1e-12
    with pytest.raises(ConfigError):
        derivative_check(X, W, t[0], t[0])


def test_first_chaos_norm_levels():
    coeffs = np.array([1.0, 1.0])
    coords = np.array([1, 2])
    assert first_chaos_norm(coeffs, coords) == pytest.approx(math.sqrt(2.0))
    assert first_chaos_norm(coeffs, coords, level=2) == pytest.approx(math.sqrt(1 / 4 + 1 / 16))


def test_h_representation_conjugates_X(sigma2):
    spec = generate_spectrum(2, 6)
    t = 0.8
    h = h_representation(sigma2, spec, t)
    c = build_X(sigma2, spec, [t], deficit_threshold=None).coeffs[0]
    np.testing.assert_allclose(h, -1j * np.conj(c), atol=1e-10)
    with pytest.raises(ConfigError):
        h_representation(dirac_measure(0.0), spec, t)


def test_bridge_process_variance():
    times = np.linspace(0.2, math.pi - 0.2, 7)
    bridge = brownian_bridge_process(4000, times)
    shape = times * (math.pi - times)
    # the path series sqrt(pi/2) sum sin(nt)/n Z_n carries c = pi/4
    np.testing.assert_allclose(bridge.X.variances(), math.pi / 4 * shape, rtol=5e-3)
    assert bridge.W.kind is PathKind.W
    report = bridge_shape_report(4000, times)
    assert report["c_fit"] == pytest.approx(0.5, rel=2e-3)
    assert report["max_rel_shape_error"] < 5e-3
    assert report["c_displayed"] == pytest.approx(2 / math.pi)
    with pytest.raises(ConfigError):
        brownian_bridge_process(0, times)


def test_ou_decay_rate():
    process = ou_process(1.0, 0.0, 1.0)
    assert process.stationary_variance == pytest.approx(0.5)
    report = ou_decay_report(process, np.linspace(0.1, 5.0, 25))
    assert report["max_dev_closed_form"] < 1e-6
    assert report["fitted_rate"] == pytest.approx(1.0, rel=1e-4)
    assert report["stated_rate"] == 2.0
    assert report["max_dev_stated"] > 1e-2
    with pytest.raises(ConfigError):
        ou_process(0.0, 0.0, 1.0)
