# kinkstats/services/theory.py
"""
Closed-form scaling-limit theory of kink statistics: KZM density, polylogarithmic
cumulant generating function, erf-corrected cumulants, cumulant ratios, normal and
binomial approximations, adiabatic onset.
"""
import enum
import functools
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import sympy
from scipy import integrate, special, stats

from ..errors import ParameterError, QuadratureError, UnsupportedOrderError
from ..models import ChainParams
from .counting import cumulant_polynomials, polynomial_coefficients

log = logging.getLogger(__name__)

POLYLOG_RADIUS = 0.99
TERM_FLOOR = 1e-15
QUADRATURE_TOLERANCE = 1e-12
# Error estimate still accepted when QUADPACK flags roundoff near machine precision
QUADRATURE_ACCEPT = 1e-10
MAX_RATIO_ORDER = 10
# Mean kink number below which a quench counts as approaching the adiabatic onset
NEAR_ONSET_MEAN = 2.0
KINK_PROBABILITY = 1.0 - 3.0 / math.pi ** 2


class Regime(str, enum.Enum):
    FAST = "fast"
    SCALING = "scaling"
    NEAR_ONSET = "near-onset"
    ADIABATIC = "adiabatic"


@dataclass(frozen=True)
class ScalingTheory:
    params: ChainParams
    tau_Q: float
    d: float
    mean: float


def _check_tau(tau_Q):
    if not tau_Q > 0:
        raise ParameterError(f"tau_Q must be positive, got {tau_Q!r}")


def _check_mean(N, d):
    if not N * d > 0:
        raise ParameterError(f"N*d must be positive, got N={N!r}, d={d!r}")


# ---------------------------------------------------------
# DENSITY AND ONSET
# ---------------------------------------------------------
def kzm_density(params, tau_Q):
    """d = (1/2 pi) sqrt(hbar / (2 J tau_Q))."""
    _check_tau(tau_Q)
    return math.sqrt(params.hbar / (2.0 * params.J * tau_Q)) / (2.0 * math.pi)


def scaling_theory(params, tau_Q):
    d = kzm_density(params, tau_Q)
    return ScalingTheory(params=params, tau_Q=float(tau_Q), d=d, mean=params.N * d)


def adiabatic_onset(params):
    """tau_Q* = hbar N^2 / (8 pi^2 J), where the mean kink number drops to 1."""
    return params.hbar * params.N ** 2 / (8.0 * math.pi ** 2 * params.J)


def quench_regime(params, tau_Q):
    _check_tau(tau_Q)
    if tau_Q > adiabatic_onset(params):
        return Regime.ADIABATIC
    if params.N * kzm_density(params, tau_Q) < NEAR_ONSET_MEAN:
        return Regime.NEAR_ONSET
    if tau_Q < params.hbar / params.J:
        return Regime.FAST
    return Regime.SCALING


# ---------------------------------------------------------
# CUMULANT GENERATING FUNCTION
# ---------------------------------------------------------
def _series_length(radius):
    if radius == 0.0:
        return 0
    # Geometric tail past this point stays below TERM_FLOOR
    return max(1, math.ceil(math.log(TERM_FLOOR * (1.0 - radius)) / math.log(radius)))


def _series_sum(terms):
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def polylog_three_halves(z):
    """Li_{3/2}(z) = sum_p z^p / p^{3/2} for |z| <= 0.99."""
    z = complex(z)
    radius = abs(z)
    if radius > POLYLOG_RADIUS:
        raise ParameterError(f"|z|={radius:.6g} outside the series domain |z| <= {POLYLOG_RADIUS}")
    n_terms = _series_length(radius)
    if n_terms == 0:
        return 0j
    p = np.arange(1, n_terms + 1, dtype=float)
    return _series_sum(np.power(z, p) / p ** 1.5)


def _gaussian_width(d):
    # 2 pi J tau_Q / hbar = 1 / (4 pi d^2), so p_k = exp(-(k / width)^2)
    return d * math.sqrt(4.0 * math.pi)


def _quad(func, upper, points):
    result = integrate.quad(
        func, 0.0, upper,
        epsabs=QUADRATURE_TOLERANCE, epsrel=QUADRATURE_TOLERANCE,
        limit=400, points=points or None, full_output=1,
    )
    value, abserr = result[0], result[1]
    if len(result) > 3 and not abserr <= QUADRATURE_ACCEPT:
        raise QuadratureError(f"Quadrature did not converge (error {abserr:.2e}): {result[3]}")
    return value


def cgf_continuum(theta, N, d):
    """(N / 2 pi) * integral_{-pi}^{pi} log[1 + (e^{i theta} - 1) exp(-k^2 / (4 pi d^2))] dk."""
    _check_mean(N, d)
    width = _gaussian_width(d)
    upper = min(math.pi, 12.0 * width)
    w = complex(np.exp(1j * theta) - 1.0)
    if w == 0:
        return 0j

    def integrand(k):
        return np.log(1.0 + w * math.exp(-(k / width) ** 2))

    # |1 + w p| is smallest at p = 1/2 (log singularity at theta = pi)
    k_half = width * math.sqrt(math.log(2.0))
    points = [k_half] if k_half < upper else []
    real = _quad(lambda k: integrand(k).real, upper, points)
    imag = _quad(lambda k: integrand(k).imag, upper, points)
    return (N / math.pi) * complex(real, imag)


def cgf_scaling(theta, N, d):
    """log P~(theta) = -N d Li_{3/2}(1 - e^{i theta}); quadrature where the series diverges."""
    _check_mean(N, d)
    x = complex(1.0 - np.exp(1j * theta))
    if abs(x) <= POLYLOG_RADIUS:
        return -N * d * polylog_three_halves(x)
    return cgf_continuum(theta, N, d)


def cgf_erf_series(theta, N, d, terms=None):
    """-N d sum_p (1 - e^{i theta})^p / p^{3/2} * erf(sqrt(pi p) / (2 d)), finite-range CGF."""
    _check_mean(N, d)
    x = complex(1.0 - np.exp(1j * theta))
    radius = abs(x)
    if radius > POLYLOG_RADIUS:
        raise ParameterError(f"|1 - e^(i theta)|={radius:.6g} outside the series domain")
    n_terms = _series_length(radius) if terms is None else int(terms)
    if n_terms == 0:
        return 0j
    p = np.arange(1, n_terms + 1, dtype=float)
    weights = special.erf(np.sqrt(math.pi * p) / (2.0 * d))
    return -N * d * _series_sum(np.power(x, p) / p ** 1.5 * weights)


# ---------------------------------------------------------
# CUMULANTS
# ---------------------------------------------------------
def erf_corrected_cumulants(params, tau_Q):
    """First two cumulants of the finite-range continuum theory."""
    _check_tau(tau_Q)
    x = params.J * tau_Q / params.hbar
    prefactor = params.N / (2.0 * math.pi) * math.sqrt(params.hbar / (2.0 * params.J * tau_Q))
    kappa1 = prefactor * special.erf(math.pi * math.sqrt(2.0 * math.pi * x))
    kappa2 = prefactor * (
        special.erf(math.sqrt(2.0 * math.pi ** 3 * x))
        - special.erf(math.sqrt(4.0 * math.pi ** 3 * x)) / math.sqrt(2.0)
    )
    return float(kappa1), float(kappa2)


def continuum_cumulant(q, params, tau_Q):
    """kappa_q = (N / 2 pi) * integral_{-pi}^{pi} f_q(p_k) dk with Landau-Zener p_k."""
    _check_tau(tau_Q)
    beta = 2.0 * math.pi * params.J * tau_Q / params.hbar
    coeffs = polynomial_coefficients(cumulant_polynomials(q)[-1])
    prefactor = params.N / (2.0 * math.pi)
    return math.fsum(
        c * prefactor * math.sqrt(math.pi / (m * beta)) * special.erf(math.pi * math.sqrt(m * beta))
        for m, c in enumerate(coeffs) if c
    )


@functools.lru_cache(maxsize=None, typed=True)
def scaling_cumulant_ratio_expr(q):
    """Exact kappa_q / kappa_1 of the scaling limit: sum_m c_{q,m} / sqrt(m)."""
    if isinstance(q, bool) or not isinstance(q, int) or not 1 <= q <= MAX_RATIO_ORDER:
        raise UnsupportedOrderError(f"Scaling ratios are tabulated for q = 1..{MAX_RATIO_ORDER}, got {q!r}")
    coeffs = polynomial_coefficients(cumulant_polynomials(q)[-1])
    return sympy.Add(*(sympy.Integer(c) / sympy.sqrt(m) for m, c in enumerate(coeffs) if c))


def scaling_cumulant_ratio(q):
    return float(scaling_cumulant_ratio_expr(q).evalf(30))


def le_cam_continuum_bound(params, tau_Q):
    """Continuum value of Le Cam's 2 sum p_k^2: sqrt(2) <n> erf(2 pi^{3/2} sqrt(J tau_Q / hbar))."""
    mean = params.N * kzm_density(params, tau_Q)
    return math.sqrt(2.0) * mean * float(special.erf(2.0 * math.pi ** 1.5 * math.sqrt(params.J * tau_Q / params.hbar)))


# ---------------------------------------------------------
# APPROXIMATING DISTRIBUTIONS
# ---------------------------------------------------------
class NormalApproximation(NamedTuple):
    """N(Nd, 3 Nd / pi^2)."""
    mean: float
    variance: float

    def pdf(self, n):
        return stats.norm.pdf(n, loc=self.mean, scale=math.sqrt(self.variance))

    def pmf_on_support(self, N):
        """Density at n = 0..N, renormalized over that support."""
        weights = self.pdf(np.arange(N + 1))
        total = math.fsum(weights)
        if total == 0.0:
            raise ParameterError("Normal approximation has no mass on 0..N")
        return weights / total


def normal_approximation(N, d):
    _check_mean(N, d)
    mean = N * d
    return NormalApproximation(mean=mean, variance=3.0 * mean / math.pi ** 2)


class BinomialModel(NamedTuple):
    """B(N_D, p) with p = 1 - 3/pi^2 and N_D = Nd / p domains of size p / d."""
    N_D: float
    p: float
    trials: int
    domain_size: float

    def pmf(self, n):
        return stats.binom.pmf(n, self.trials, self.p)

    def mean(self):
        return self.trials * self.p


def binomial_model(N, d):
    _check_mean(N, d)
    N_D = N * d / KINK_PROBABILITY
    # Nearest integer, halves rounded up
    trials = int(math.floor(N_D + 0.5))
    return BinomialModel(N_D=N_D, p=KINK_PROBABILITY, trials=trials, domain_size=KINK_PROBABILITY / d)
