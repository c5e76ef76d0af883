import cmath
import math

import mpmath
import numpy as np
import pytest
import sympy
from scipy import integrate

from kinkstats.errors import ParameterError, UnsupportedOrderError
from kinkstats.models import ChainParams
from kinkstats.services.counting import cumulants_exact
from kinkstats.services.mode_dynamics import quench
from kinkstats.services.theory import (
    Regime, adiabatic_onset, binomial_model, cgf_continuum, cgf_erf_series, cgf_scaling,
    continuum_cumulant, erf_corrected_cumulants, kzm_density, normal_approximation,
    polylog_three_halves, quench_regime, scaling_cumulant_ratio, scaling_cumulant_ratio_expr,
)

UNIT = ChainParams(N=400)


def theta_at_radius(r):
    """theta in (0, pi] with |1 - e^{i theta}| = r."""
    return 2.0 * math.asin(r / 2.0)


# ---------------------------------------------------------
# DENSITY AND ONSET
# ---------------------------------------------------------
def test_kzm_density():
    assert kzm_density(UNIT, 0.5) == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-15)
    assert UNIT.N * kzm_density(UNIT, 100.0) == pytest.approx(4.5016, abs=1e-4)
    assert kzm_density(UNIT, 20.0) / kzm_density(UNIT, 40.0) == pytest.approx(math.sqrt(2))


def test_kzm_density_rejects_nonpositive_tau():
    with pytest.raises(ParameterError):
        kzm_density(UNIT, 0.0)


def test_adiabatic_onset():
    onset = adiabatic_onset(UNIT)
    assert onset == pytest.approx(2026.4, abs=0.05)
    assert adiabatic_onset(ChainParams(N=800)) == pytest.approx(4 * onset)
    assert UNIT.N * kzm_density(UNIT, onset) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("tau_Q,regime", [
    (0.5, Regime.FAST),
    (100.0, Regime.SCALING),
    (1000.0, Regime.NEAR_ONSET),
    (3000.0, Regime.ADIABATIC),
])
def test_quench_regime(tau_Q, regime):
    assert quench_regime(UNIT, tau_Q) is regime


# ---------------------------------------------------------
# POLYLOGARITHM AND GENERATING FUNCTION
# ---------------------------------------------------------
def test_polylog_at_zero():
    assert polylog_three_halves(0) == 0


def test_polylog_at_one_half():
    value = polylog_three_halves(0.5)
    assert value.real == pytest.approx(0.58806, abs=5e-6)
    with mpmath.workdps(30):
        reference = float(mpmath.polylog(1.5, 0.5))
    assert value.real == pytest.approx(reference, abs=1e-14)


@pytest.mark.parametrize("z", [0.3 + 0.4j, -0.9, 0.99j, 0.7 * cmath.exp(2.0j)])
def test_polylog_against_mpmath(z):
    with mpmath.workdps(30):
        expected = complex(mpmath.polylog(1.5, z))
    assert abs(polylog_three_halves(z) - expected) < 1e-13


def test_polylog_conjugate_symmetry():
    z = 0.45 - 0.6j
    assert polylog_three_halves(z.conjugate()) == pytest.approx(polylog_three_halves(z).conjugate(), abs=1e-14)


def test_polylog_rejects_outside_series_domain():
    with pytest.raises(ParameterError):
        polylog_three_halves(0.995)


def test_cgf_vanishes_at_zero():
    assert cgf_scaling(0.0, 400, 0.01) == 0


def test_cgf_small_theta_expansion():
    N, d = 400, kzm_density(UNIT, 100.0)
    mean = N * d
    theta = 1e-3
    expected = 1j * theta * mean - theta ** 2 / 2 * (1 - 1 / math.sqrt(2)) * mean
    assert abs(cgf_scaling(theta, N, d) - expected) < 10 * theta ** 3 * mean
    # The Gaussian-fit variance 3/pi^2 is close to, but not exactly, the second cumulant
    assert (1 - 1 / math.sqrt(2)) == pytest.approx(3 / math.pi ** 2, rel=0.04)


@pytest.mark.parametrize("radius", [0.5, 0.9, 0.99])
def test_series_and_quadrature_branches_agree(radius):
    N, d = 400, kzm_density(UNIT, 100.0)
    for theta in (theta_at_radius(radius), -theta_at_radius(radius)):
        series = -N * d * polylog_three_halves(1 - cmath.exp(1j * theta))
        assert abs(series - cgf_continuum(theta, N, d)) < 1e-9


def test_cgf_switches_to_quadrature_beyond_the_series_domain():
    N, d = 400, kzm_density(UNIT, 100.0)
    theta = theta_at_radius(1.5)
    assert cgf_scaling(theta, N, d) == cgf_continuum(theta, N, d)
    assert cgf_scaling(math.pi, N, d).imag == pytest.approx(
        N / math.pi * math.pi * d * math.sqrt(4 * math.pi * math.log(2)), rel=1e-8
    )


def test_cgf_is_conjugate_symmetric():
    N, d = 400, kzm_density(UNIT, 10.0)
    theta = 2.5
    assert cgf_scaling(-theta, N, d) == pytest.approx(cgf_scaling(theta, N, d).conjugate(), abs=1e-9)


def test_erf_series_reproduces_finite_range_integral():
    # Large d: the erf factors are far from saturated
    N, d = 400, kzm_density(UNIT, 0.05)
    theta = theta_at_radius(0.5)
    assert abs(cgf_erf_series(theta, N, d) - cgf_continuum(theta, N, d)) < 1e-8


def test_erf_series_reduces_to_scaling_form_for_slow_quenches():
    N, d = 400, kzm_density(UNIT, 100.0)
    theta = theta_at_radius(0.9)
    assert abs(cgf_erf_series(theta, N, d) - cgf_scaling(theta, N, d)) < 1e-9


# ---------------------------------------------------------
# CUMULANTS
# ---------------------------------------------------------
def test_erf_corrected_cumulants_saturate():
    kappa1, kappa2 = erf_corrected_cumulants(UNIT, 100.0)
    mean = UNIT.N * kzm_density(UNIT, 100.0)
    assert kappa1 == pytest.approx(mean, rel=1e-12)
    assert kappa2 == pytest.approx((1 - 1 / math.sqrt(2)) * mean, rel=1e-12)


def test_erf_corrected_second_cumulant_is_positive():
    for tau_Q in np.geomspace(1e-3, 1e4, 40):
        _, kappa2 = erf_corrected_cumulants(UNIT, float(tau_Q))
        assert kappa2 > 0


def test_erf_arguments_above_six_give_scaling_forms():
    # smallest argument sqrt(2 pi^3 tau_Q) > 6 once tau_Q > 36 / (2 pi^3)
    tau_Q = 36.0 / (2 * math.pi ** 3) * 1.01
    kappa1, kappa2 = erf_corrected_cumulants(UNIT, tau_Q)
    mean = UNIT.N * kzm_density(UNIT, tau_Q)
    assert kappa1 == pytest.approx(mean, rel=1e-10)
    assert kappa2 == pytest.approx((1 - 1 / math.sqrt(2)) * mean, rel=1e-10)


@pytest.mark.parametrize("tau_Q", [0.05, 1.0, 100.0])
def test_continuum_cumulants_match_erf_forms(tau_Q):
    kappa1, kappa2 = erf_corrected_cumulants(UNIT, tau_Q)
    assert continuum_cumulant(1, UNIT, tau_Q) == pytest.approx(kappa1, rel=1e-12)
    assert continuum_cumulant(2, UNIT, tau_Q) == pytest.approx(kappa2, rel=1e-12)


def test_continuum_cumulant_against_quadrature():
    tau_Q = 0.3
    beta = 2 * math.pi * tau_Q
    f3 = lambda p: p - 3 * p ** 2 + 2 * p ** 3
    integral, _ = integrate.quad(lambda k: f3(math.exp(-beta * k ** 2)), -math.pi, math.pi, epsabs=1e-14, epsrel=1e-12)
    assert continuum_cumulant(3, UNIT, tau_Q) == pytest.approx(UNIT.N / (2 * math.pi) * integral, rel=1e-9)


def test_ratio_expressions_are_the_tabulated_radicals():
    sqrt = sympy.sqrt
    assert scaling_cumulant_ratio_expr(1) == 1
    assert sympy.simplify(scaling_cumulant_ratio_expr(2) - (1 - 1 / sqrt(2))) == 0
    assert sympy.simplify(scaling_cumulant_ratio_expr(3) - (1 - 3 / sqrt(2) + 2 / sqrt(3))) == 0
    assert sympy.simplify(scaling_cumulant_ratio_expr(4) - (-2 - 7 / sqrt(2) + 4 * sqrt(3))) == 0


@pytest.mark.parametrize("q,decimal,places", [
    (2, 0.29289, 5),
    (3, 0.03338, 5),
    (4, -0.02154, 5),
    (5, -0.005962, 6),
    (6, 0.009838, 6),
    (10, 0.01761, 5),
])
def test_ratio_decimals(q, decimal, places):
    assert round(scaling_cumulant_ratio(q), places) == pytest.approx(decimal, abs=0.6 * 10 ** -places)


@pytest.mark.parametrize("q", [0, 11, 2.0])
def test_ratio_order_bounds(q):
    with pytest.raises(UnsupportedOrderError):
        scaling_cumulant_ratio(q)


def test_exact_cumulants_converge_to_scaling_ratios():
    params = ChainParams(N=100_000)
    report = cumulants_exact(quench(params, 1e3), 6)
    for q in range(1, 7):
        assert report.ratio(q) == pytest.approx(scaling_cumulant_ratio(q), abs=1e-3)


# ---------------------------------------------------------
# APPROXIMATING DISTRIBUTIONS
# ---------------------------------------------------------
def test_normal_approximation_parameters():
    normal = normal_approximation(400, kzm_density(UNIT, 100.0))
    assert normal.mean == pytest.approx(4.5016, abs=1e-4)
    assert normal.variance == pytest.approx(1.3684, abs=1e-4)
    assert normal.variance / normal.mean == pytest.approx(3 / math.pi ** 2)


def test_normal_pdf_integrates_to_one():
    normal = normal_approximation(400, kzm_density(UNIT, 100.0))
    total, _ = integrate.quad(normal.pdf, -np.inf, np.inf)
    assert total == pytest.approx(1.0, abs=1e-10)


def test_normal_pmf_on_support_is_renormalized():
    normal = normal_approximation(400, kzm_density(UNIT, 100.0))
    weights = normal.pmf_on_support(400)
    assert len(weights) == 401
    assert math.fsum(weights) == pytest.approx(1.0, abs=1e-14)


def test_normal_rejects_empty_mean():
    with pytest.raises(ParameterError):
        normal_approximation(400, 0.0)


def test_binomial_model():
    d = kzm_density(UNIT, 100.0)
    model = binomial_model(400, d)
    assert model.p == pytest.approx(0.69, abs=0.01)
    assert model.trials == round(model.N_D)
    assert model.mean() == pytest.approx(400 * d, abs=model.p / 2)
    assert model.domain_size == pytest.approx(model.p / d)
    assert math.fsum(model.pmf(np.arange(model.trials + 1))) == pytest.approx(1.0)


def test_binomial_converges_to_normal():
    p = 1 - 3 / math.pi ** 2
    N, d = 10_000, 1000 * p / 10_000
    model = binomial_model(N, d)
    assert model.trials == 1000
    n = np.arange(model.trials + 1)
    normal = normal_approximation(N, d).pdf(n)
    assert 0.5 * np.abs(model.pmf(n) - normal).sum() < 0.01
