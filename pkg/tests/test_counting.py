import math

import numpy as np
import pytest
import sympy
from scipy import stats

from kinkstats.errors import NumericalFault, ParameterError, UnsupportedOrderError
from kinkstats.models import ModeProbabilities, Pairing
from kinkstats.services.counting import (
    _cleanup, characteristic_function, cumulant_polynomials, cumulants_exact,
    cumulants_from_moments, distribution_cumulants, kink_distribution,
    kink_distribution_convolution, le_cam_diagnostic, moments_from_distribution,
    poisson_binomial_pmf, poisson_binomial_pmf_convolution,
)
from kinkstats.services.theory import le_cam_continuum_bound

p = sympy.Symbol("p")


def enumerate_pmf(values):
    """Brute force over all 2^m excitation patterns."""
    values = np.asarray(values)
    m = len(values)
    patterns = (np.arange(2 ** m)[:, None] >> np.arange(m)) & 1
    weights = np.prod(np.where(patterns == 1, values, 1.0 - values), axis=1)
    return np.bincount(patterns.sum(axis=1), weights=weights, minlength=m + 1)


# ---------------------------------------------------------
# CHARACTERISTIC FUNCTION AND DISTRIBUTION
# ---------------------------------------------------------
def test_characteristic_function_at_zero_is_one(random_probs):
    probs = random_probs(12)
    assert characteristic_function(0.0, probs) == pytest.approx(1.0)


def test_characteristic_function_is_bounded(random_probs):
    probs = random_probs(12)
    values = characteristic_function(np.linspace(-math.pi, math.pi, 101), probs)
    assert values.shape == (101,)
    assert np.all(np.abs(values) <= 1.0 + 1e-12)


def test_distribution_is_normalized_with_full_support(lz_probs):
    dist = kink_distribution(lz_probs(400, 100.0))
    assert len(dist) == 401
    assert math.fsum(dist.probabilities) == pytest.approx(1.0, abs=1e-12)
    assert np.all(dist.probabilities >= 0.0)


def test_mean_of_distribution_is_first_cumulant(lz_probs):
    probs = lz_probs(400, 100.0)
    assert kink_distribution(probs).mean() == pytest.approx(cumulants_exact(probs, 1)[1], rel=1e-10)


def test_all_zero_probabilities_give_point_mass():
    dist = kink_distribution(ModeProbabilities.from_values(np.zeros(5)))
    np.testing.assert_array_equal(dist.probabilities, np.eye(11)[0])


def test_dft_convolution_and_enumeration_agree():
    rng = np.random.default_rng(4)
    for _ in range(100):
        m = int(rng.integers(1, 17))
        values = rng.uniform(0.0, 1.0, size=m)
        brute = enumerate_pmf(values)
        np.testing.assert_allclose(poisson_binomial_pmf(values), brute, rtol=0, atol=1e-12)
        np.testing.assert_allclose(poisson_binomial_pmf_convolution(values), brute, rtol=0, atol=1e-12)


def test_paired_modes_only_produce_even_kink_numbers(random_probs):
    probs = random_probs(6)
    dist = kink_distribution(probs, Pairing.PAIRED)
    assert len(dist) == 13
    assert np.all(dist.probabilities[1::2] == 0.0)
    assert dist.mean() == pytest.approx(2.0 * math.fsum(probs.p))
    np.testing.assert_allclose(dist.probabilities, kink_distribution_convolution(probs, Pairing.PAIRED).probabilities, atol=1e-12)


def test_cleanup_tolerates_float_noise_only():
    noisy = np.array([0.5 + 1e-13j, 0.5, -5e-13])
    np.testing.assert_allclose(_cleanup(noisy, 1), [0.5, 0.5, 0.0])
    with pytest.raises(NumericalFault):
        _cleanup(np.array([1.0 + 1e-8j, 0.0]), 1)
    with pytest.raises(NumericalFault):
        _cleanup(np.array([1.0 + 1e-11, -1e-11]), 1)
    with pytest.raises(NumericalFault):
        _cleanup(np.array([0.9, 0.05]), 1)


# ---------------------------------------------------------
# CUMULANTS
# ---------------------------------------------------------
def test_recursion_polynomials():
    f1, f2, f3, f4 = (poly.as_expr() for poly in cumulant_polynomials(4))
    assert sympy.expand(f1 - p) == 0
    assert sympy.expand(f2 - (p - p ** 2)) == 0
    assert sympy.expand(f3 - (p - 3 * p ** 2 + 2 * p ** 3)) == 0
    assert sympy.expand(f4 - (p - 7 * p ** 2 + 12 * p ** 3 - 6 * p ** 4)) == 0


def test_polynomial_order_is_bounded():
    assert len(cumulant_polynomials(20)) == 20
    with pytest.raises(UnsupportedOrderError):
        cumulant_polynomials(21)
    with pytest.raises(ParameterError):
        cumulant_polynomials(0)


def test_single_mode_cumulants_are_bernoulli():
    # Two Bernoulli(1/2) factors: Binomial(2, 1/2)
    report = cumulants_exact(ModeProbabilities.from_values([0.5]), 4)
    assert report.kappa == pytest.approx((1.0, 0.5, 0.0, -0.25))


def test_recursion_matches_moments():
    rng = np.random.default_rng(11)
    for _ in range(100):
        probs = ModeProbabilities.from_values(rng.uniform(0.0, 1.0, size=int(rng.integers(1, 9))))
        exact = cumulants_exact(probs, 6)
        moments = distribution_cumulants(kink_distribution_convolution(probs), 6)
        np.testing.assert_allclose(moments.kappa, exact.kappa, rtol=1e-9, atol=1e-9)


def test_moments_about_a_shift_give_the_same_cumulants(random_probs):
    dist = kink_distribution(random_probs(5))
    plain = cumulants_from_moments(moments_from_distribution(dist, 5))
    shifted = cumulants_from_moments(moments_from_distribution(dist, 5, shift=2.0), shift=2.0)
    np.testing.assert_allclose(plain.kappa, shifted.kappa, rtol=1e-10, atol=1e-12)


def test_moment_path_order_limit(random_probs):
    dist = kink_distribution(random_probs(3))
    with pytest.raises(UnsupportedOrderError):
        distribution_cumulants(dist, 11)


def test_recursion_needs_independent_modes(random_probs):
    with pytest.raises(ParameterError):
        cumulants_exact(random_probs(3), 2, Pairing.PAIRED)


@pytest.mark.parametrize("N", [8, 100, 400])
def test_sub_poissonian(lz_probs, N):
    for tau_Q in np.geomspace(0.1, 1e4, 30):
        probs = lz_probs(N, float(tau_Q))
        kappa1, kappa2 = cumulants_exact(probs, 2).kappa
        assert kappa2 <= kappa1
        # p^2 is invisible next to p below ~1e-16
        if probs.p.max() > 1e-12:
            assert kappa2 < kappa1


# ---------------------------------------------------------
# POISSON COMPARISON
# ---------------------------------------------------------
def test_le_cam_small_example():
    probs = ModeProbabilities.from_values([0.1, 0.2])
    diagnostic = le_cam_diagnostic(probs)
    assert diagnostic.bound == pytest.approx(4 * (0.01 + 0.04))

    exact = poisson_binomial_pmf_convolution([0.1, 0.1, 0.2, 0.2])
    poisson = stats.poisson.pmf(np.arange(5), 0.6)
    tail = stats.poisson.sf(4, 0.6)
    assert diagnostic.tv_to_poisson == pytest.approx(np.abs(exact - poisson).sum() + tail, rel=1e-10)
    assert diagnostic.tv_to_poisson <= diagnostic.bound


def test_le_cam_counts_the_poisson_mass_beyond_n():
    # One mode with p = 1 pins two kinks; Poisson(2) still spreads mass over n > 2
    diagnostic = le_cam_diagnostic(ModeProbabilities.from_values([1.0]))
    e2 = math.exp(-2.0)
    expected = e2 + 2 * e2 + (1 - 2 * e2) + (1 - 5 * e2)
    assert diagnostic.tv_to_poisson == pytest.approx(expected, rel=1e-12)
    assert diagnostic.tv_to_poisson == pytest.approx(1.4587, abs=1e-4)
    assert diagnostic.tv_to_poisson <= 2.0


def test_le_cam_without_excitations():
    diagnostic = le_cam_diagnostic(ModeProbabilities.from_values(np.zeros(4)))
    assert diagnostic == (0.0, 0.0)


def test_le_cam_rejects_paired_modes(random_probs):
    with pytest.raises(ParameterError):
        le_cam_diagnostic(random_probs(3), Pairing.PAIRED)


@pytest.mark.parametrize("N", [400, 2000])
def test_le_cam_bound_in_the_scaling_window(lz_probs, N):
    # Up to tau_Q ~ N^2 / (240 pi) the lattice sum equals the continuum to better than 1e-6
    for tau_Q in np.geomspace(50.0, N ** 2 / (240 * math.pi), 8):
        probs = lz_probs(N, float(tau_Q))
        kappa1 = cumulants_exact(probs, 1)[1]
        diagnostic = le_cam_diagnostic(probs)
        assert diagnostic.bound >= math.sqrt(2) * kappa1 * (1 - 1e-6)
        assert diagnostic.tv_to_poisson <= diagnostic.bound
        assert diagnostic.bound == pytest.approx(le_cam_continuum_bound(probs.params, float(tau_Q)), rel=1e-6)


def test_fano_factor_in_the_slow_regime(lz_probs):
    for tau_Q in np.geomspace(50.0, 200.0, 5):
        kappa1, kappa2 = cumulants_exact(lz_probs(400, float(tau_Q)), 2).kappa
        assert kappa2 / kappa1 == pytest.approx((2 - math.sqrt(2)) / 2, abs=0.01)
