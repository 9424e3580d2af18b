import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from errors import BudgetExhaustedError, ConfigError, IntegrabilityError
from models.measures import DensityMeasure, MeasureKind, Spectrum, TruncationBudget
from services.processes import path_generator
from services.spectral_measures import (
    admissibility_constant,
    atomic_measure,
    bernoulli_measure,
    bridge_measure,
    cascade_leaves,
    dirac_measure,
    exponential_lipschitz_constant,
    explicit_spectrum,
    gaussian_density,
    generate_spectrum,
    integrate,
    linear_integrability_constant,
    measure_from_dict,
    measure_to_dict,
    parseval_deficit,
    parseval_deficits,
    parseval_partial_sums,
    power_density,
    product_depth,
    sigma_hat,
    sigma_hat_values,
    spectrum_from_dict,
    spectrum_multiples,
    uniform_density,
    weighted_admissibility_constant,
)


def test_spectrum_prefixes_match_displays():
    assert spectrum_multiples(2, 7) == tuple(Fraction(v) for v in (0, 1, 4, 5, 16, 17, 20))
    assert spectrum_multiples(4, 6) == tuple(Fraction(v) for v in (0, 2, 16, 18, 128, 130))
    assert spectrum_multiples(3, 4) == (Fraction(0), Fraction(3, 2), Fraction(9), Fraction(21, 2))


def test_lambda3_fifth_element_follows_digit_rule():
    # 18 = 3 * 6 would need the digit 3; only 0 and 3/2 are allowed in base 6
    assert spectrum_multiples(3, 5)[4] == Fraction(54)
    assert Fraction(18) not in spectrum_multiples(3, 16)


def test_generated_spectrum_is_increasing_from_zero():
    spec = generate_spectrum(3, 64)
    assert spec.count == 64
    assert spec.frequencies[0] == 0.0
    assert np.all(np.diff(spec.frequencies) > 0)
    assert spec.frequencies[1] == pytest.approx(2 * math.pi * 1.5)
    assert spec.truncate(5).multiples == spec.multiples[:5]


@pytest.mark.parametrize("m,N", [(1, 8), (2, 0), (2.5, 4)])
def test_generate_spectrum_rejects_bad_arguments(m, N):
    with pytest.raises(ConfigError):
        generate_spectrum(m, N)


def test_spectrum_must_be_strictly_increasing():
    with pytest.raises(ConfigError):
        Spectrum(frequencies=[0.0, 2.0, 1.0])


def test_sigma_hat_is_one_at_zero(sigma2):
    result = sigma_hat(sigma2, 0.0)
    assert result.value == 1.0
    assert result.error_bound == 0.0


def test_sigma_hat_matches_high_precision_product(sigma2):
    mpmath.mp.dps = 40
    for t in (0.3, 3.7, -25.0, 400.0):
        exact = mpmath.fprod(mpmath.cos(mpmath.mpf(t) / 4 ** k) for k in range(1, 120))
        got = sigma_hat(sigma2, t)
        assert abs(got.value - float(exact)) <= max(got.error_bound, 1e-15) + 1e-14


def test_product_depth_grows_with_t():
    budget = TruncationBudget()
    small, _ = product_depth(0.25, 1.0, budget)
    large, bound = product_depth(0.25, 1e20, budget)
    assert small == budget.product_depth
    assert large > small
    assert bound <= budget.abs_tol


def test_product_depth_cap_raises():
    budget = TruncationBudget(product_depth=2, max_product_depth=3, abs_tol=1e-12)
    with pytest.raises(BudgetExhaustedError) as info:
        sigma_hat(bernoulli_measure(2), 100.0, budget)
    assert info.value.depth == 3
    assert info.value.best_bound > 1e-12


def test_dirac_and_one_sided_atoms():
    assert sigma_hat(dirac_measure(0.0), 17.0).value == pytest.approx(1.0)
    one_sided = atomic_measure([1.0], [1.0])
    assert not one_sided.even
    value = sigma_hat(one_sided, 0.4).value
    assert value == pytest.approx(complex(math.cos(0.4), math.sin(0.4)))


def test_uniform_closed_form_matches_quadrature():
    measure = uniform_density(0.5)
    t = np.array([0.0, 0.7, 3.0, 11.0])
    closed, _, _ = sigma_hat_values(measure, t)
    quad, _, _ = sigma_hat_values(measure, t, method="quadrature")
    np.testing.assert_allclose(closed, quad, atol=1e-10)
    np.testing.assert_allclose(closed[1:], 2.0 * np.sin(0.5 * t[1:]) / t[1:], rtol=1e-12)


def test_cascade_integrates_second_moment(sigma2):
    # Bernoulli convolution with ratio rho has variance rho^2 / (1 - rho^2)
    result = integrate(sigma2, lambda u: u * u)
    assert result.method == "cascade"
    assert result.value == pytest.approx(1.0 / 15.0, abs=1e-14)
    assert exponential_lipschitz_constant(sigma2) == pytest.approx(1.0 / 15.0, abs=1e-14)


def test_ifs_invariance_for_random_polynomials(sigma2):
    rng = path_generator(21, 0)
    for _ in range(20):
        coeffs = rng.standard_normal(int(rng.integers(1, 8)))
        f = lambda u, c=coeffs: np.polynomial.polynomial.polyval(u, c)
        whole = integrate(sigma2, f).value
        plus = integrate(sigma2, lambda u: f(sigma2.tau(u, +1))).value
        minus = integrate(sigma2, lambda u: f(sigma2.tau(u, -1))).value
        assert whole == pytest.approx(0.5 * plus + 0.5 * minus, abs=1e-12)


def test_sigma_hat_agrees_with_cascade_integral(sigma2):
    t = np.concatenate([path_generator(22, 0).uniform(-20.0, 20.0, size=48), [2 * math.pi, -2 * math.pi]])
    for ti in t:
        expected = sigma_hat(sigma2, ti)
        direct = integrate(sigma2, lambda u: np.exp(1j * ti * u)).value
        assert abs(direct - expected.value) <= expected.error_bound + 1e-12
    assert abs(sigma_hat(sigma2, 2 * math.pi).value) < 1e-15
    assert abs(integrate(sigma2, lambda u: np.exp(2j * math.pi * u)).value) < 1e-12


def test_exponential_lipschitz_constant_examples():
    assert exponential_lipschitz_constant(uniform_density(0.5)) == pytest.approx(1.0 / 12.0, abs=1e-12)
    assert exponential_lipschitz_constant(dirac_measure(0.0)) == 0.0
    with pytest.raises(IntegrabilityError):
        exponential_lipschitz_constant(gaussian_density(1.0))


def test_cascade_leaves_are_symmetric_and_cached():
    leaves = cascade_leaves(0.25, 10)
    assert leaves.size == 2 ** 10
    assert np.sum(leaves) == pytest.approx(0.0, abs=1e-12)
    assert cascade_leaves(0.25, 10) is leaves
    assert np.max(np.abs(leaves)) < bernoulli_measure(2).support_radius


def test_parseval_deficit_small_and_nonnegative(sigma2, lambda2):
    t = np.linspace(-math.pi, math.pi, 41)
    d = parseval_deficits(sigma2, lambda2, t)
    assert np.all(d > -1e-10)
    assert np.max(d) < 1e-3


def test_parseval_deficit_decreases_with_N(sigma2, lambda2):
    t = np.array([0.3, 2.0, -7.5])
    partial = parseval_partial_sums(sigma2, lambda2, t)
    assert np.all(np.diff(partial, axis=1) >= 0)
    np.testing.assert_allclose(1.0 - partial[:, -1], parseval_deficits(sigma2, lambda2, t), atol=1e-14)


def test_non_orthogonal_spectrum_has_negative_deficit(sigma2):
    spec = explicit_spectrum(["0", "1/2"])
    assert spec.multiples == (Fraction(0), Fraction(1, 2))
    assert parseval_deficit(sigma2, spec, 0.0) < -0.1


def test_admissibility_constants():
    assert admissibility_constant(dirac_measure(0.0)) == pytest.approx(1.0)
    bridge = bridge_measure(500)
    exact = sum(1.0 / (1.0 + 4.0 * n * n) for n in range(1, 200_000))
    assert admissibility_constant(bridge) == pytest.approx(exact, abs=1.0 / 2000)
    assert math.isinf(linear_integrability_constant(bridge))
    with pytest.raises(IntegrabilityError):
        exponential_lipschitz_constant(bridge)


def test_power_density_needs_higher_weight():
    measure = power_density(2.0)
    assert measure.exponent == 2
    assert math.isinf(admissibility_constant(measure))
    assert weighted_admissibility_constant(measure, 2) == pytest.approx(math.pi / math.sqrt(2.0), rel=1e-8)


def test_density_violating_admissibility_is_rejected():
    with pytest.raises(IntegrabilityError):
        DensityMeasure(density=lambda u: u * u, family="quadratic", growth=2.0)


def test_infinite_mass_density_has_no_transform():
    ou = measure_from_dict({"kind": "ou", "theta": 1.0, "alpha": 1.0})
    assert not ou.finite_mass
    with pytest.raises(IntegrabilityError):
        sigma_hat(ou, 1.0)


def test_measure_and_spectrum_dict_round_trip():
    for spec in ({"kind": "aifs", "ratio": 0.25}, {"kind": "bridge", "n_max": 50},
                 {"kind": "density", "family": "gaussian", "params": {"scale": 2.0}}):
        measure = measure_from_dict(spec)
        assert measure_to_dict(measure) == spec
    assert measure_from_dict({"kind": "aifs", "m": 3}).ratio == pytest.approx(1.0 / 6.0)
    assert measure_from_dict({"kind": "atomic", "points": [1.0], "weights": [2.0]}).kind is MeasureKind.ATOMIC
    assert spectrum_from_dict({"m": 2, "N": 4}).count == 4
    assert spectrum_from_dict({"explicit": ["0", "3/2"]}).frequencies[1] == pytest.approx(3.0 * math.pi)


@pytest.mark.parametrize("spec", [
    {"kind": "levy"},
    {"kind": "aifs", "ratio": 1.5},
    {"kind": "density", "family": "cauchy"},
    {"kind": "atomic", "points": [1.0, 2.0], "weights": [1.0]},
])
def test_bad_measure_specs(spec):
    with pytest.raises(ConfigError):
        measure_from_dict(spec)
