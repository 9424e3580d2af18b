import math

import numpy as np
import pytest

from errors import MismatchedContextError, NonConvergenceError, UnderResolvedGridError, UnsupportedFunctionError
from models.chaos import ChaosElement, MultiIndex
from models.paths import Partition
from services.chaos_algebra import first_chaos, minus_norm, wick_power
from services.covariance import CovarianceKernel
from services.processes import build_W, build_X, sample_paths
from services.spectral_measures import bernoulli_measure, generate_spectrum
from services.wick_ito import (
    deterministic_integrand,
    gaussian_expectation,
    identity_integrand,
    ito_formula_check_mc,
    ito_formula_check_polynomial,
    ito_function,
    riemann_sum_from_increments,
    wick_ito_integral,
    wick_riemann_sum,
)


@pytest.fixture(scope="module")
def small_pair(sigma2):
    spec = generate_spectrum(2, 8)
    ends = np.array([0.0, 1.0])
    X = build_X(sigma2, spec, ends, deficit_threshold=None)
    W = build_W(sigma2, spec, ends, deficit_threshold=None)
    return X, W


def test_riemann_sum_from_increments():
    Ys = [ChaosElement.constant(2.0), first_chaos([1.0])]
    dX = np.array([[1.0, 0.0], [0.0, 1.0]])
    S = riemann_sum_from_increments(Ys, dX, np.array([1, 2]))
    assert S == ChaosElement({MultiIndex.unit(1): 2.0, MultiIndex([(1, 1), (2, 1)]): 1.0})


def test_deterministic_integrand_telescopes(small_pair):
    X, _ = small_pair
    Y = deterministic_integrand(np.ones_like, label="1")
    S = wick_riemann_sum(Y, X, Partition.uniform(0.0, 1.0, 8))
    assert minus_norm(S - X.element(1), 0) < 1e-12


def test_integral_of_X_against_W(small_pair):
    X, W = small_pair
    result = wick_ito_integral(identity_integrand(X), W, 0.0, 1.0, tol=1e-9, max_refinements=12)
    exact = wick_power(X.element(1), 2).scale(0.5)
    assert minus_norm(result.extrapolated - exact, 2) < 1e-8
    # raw left-point sums miss -1/2 sum (dX)<>2, first order in the mesh
    assert result.fitted_order == pytest.approx(1.0, abs=0.1)
    assert result.observed_level == 2
    assert result.refinements >= 3
    assert [row["mesh"] for row in result.table] == sorted((row["mesh"] for row in result.table), reverse=True)
    assert set(result.to_dict()) >= {"fitted_order", "table", "refinements"}


def test_non_convergence_carries_trace(small_pair):
    X, W = small_pair
    with pytest.raises(NonConvergenceError) as info:
        wick_ito_integral(identity_integrand(X), W, tol=1e-15, max_refinements=1)
    assert len(info.value.trace) == 1
    assert info.value.trace[0]["norm_diff"] > 0


def test_mismatched_measure_is_rejected(small_pair):
    _, W = small_pair
    other = build_X(bernoulli_measure(2), W.spectrum, [0.0, 1.0], deficit_threshold=None)
    with pytest.raises(MismatchedContextError):
        wick_ito_integral(identity_integrand(other), W)


@pytest.mark.parametrize("f", ["x2", "x3", (1.0, -0.5, 0.25, 2.0)])
def test_ito_formula_polynomial(small_pair, f):
    X, _ = small_pair
    report = ito_formula_check_polynomial(f, 0.0, 1.0, X)
    assert report.residual < 1e-7
    assert report.rate_source == "truncated"
    assert report.integral is not None


def test_ito_formula_with_kernel_rate_sees_truncation(small_pair):
    X, _ = small_pair
    truncated = ito_formula_check_polynomial("x2", 0.0, 1.0, X).residual
    kernel = ito_formula_check_polynomial("x2", 0.0, 1.0, X, rate_source="kernel").residual
    assert kernel > 1e-6 > truncated
    gap = CovarianceKernel(X.measure, X.budget).variance(1.0) - X.variances()[1]
    assert kernel == pytest.approx(gap, abs=2e-6)


def test_ito_formula_degenerate_interval(small_pair):
    X, _ = small_pair
    report = ito_formula_check_polynomial("x3", 1.0, 1.0, X)
    assert report.residual == 0.0
    assert report.integral is None


def test_unsupported_functions(small_pair):
    X, _ = small_pair
    with pytest.raises(UnsupportedFunctionError):
        ito_function("exp")
    with pytest.raises(UnsupportedFunctionError):
        ito_formula_check_polynomial("cos", 0.0, 1.0, X)
    with pytest.raises(UnsupportedFunctionError):
        ito_formula_check_polynomial([0, 0, 0, 0, 1], 0.0, 1.0, X)


def test_gaussian_expectation():
    assert gaussian_expectation(np.cos, 0.5)[0] == pytest.approx(math.exp(-0.25), abs=1e-14)
    np.testing.assert_allclose(gaussian_expectation(lambda x: x ** 2, [0.3, 2.0]), [0.3, 2.0])


def test_ito_formula_monte_carlo(sigma2):
    times = np.linspace(0.0, 1.0, 33)
    X = build_X(sigma2, generate_spectrum(2, 16), times)
    ens = sample_paths(X, 4000, seed=99)
    report = ito_formula_check_mc("cos", 0.0, 1.0, ens)
    assert abs(report.z_mc) < 5.0
    assert abs(report.z_analytic) < 5.0
    assert report.grid_points == 33
    assert report.correction_mean < 0.0


def test_monte_carlo_grid_requirements(sigma2):
    spec = generate_spectrum(2, 16)
    coarse = sample_paths(build_X(sigma2, spec, np.linspace(0.0, 1.0, 5)), 10, seed=1)
    with pytest.raises(UnderResolvedGridError):
        ito_formula_check_mc("sin", 0.0, 1.0, coarse)
    fine = sample_paths(build_X(sigma2, spec, np.linspace(0.0, 1.0, 33)), 10, seed=1)
    with pytest.raises(UnderResolvedGridError):
        ito_formula_check_mc("sin", 0.0, 0.97, fine)
