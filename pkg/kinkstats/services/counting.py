# kinkstats/services/counting.py
"""
Full counting statistics of kinks: the Poisson binomial distribution of
independent mode excitations, its cumulants and a Poisson comparison.
"""
import functools
import logging
import math
from typing import NamedTuple

import numpy as np
import sympy
from scipy import stats

from ..errors import NumericalFault, ParameterError, UnsupportedOrderError
from ..models import CumulantReport, KinkDistribution, Pairing

log = logging.getLogger(__name__)

IMAG_RESIDUE_LIMIT = 1e-10
NEGATIVE_ZERO_WINDOW = 1e-12
NORMALIZATION_RESIDUE = 1e-10
MAX_POLYNOMIAL_ORDER = 20
MAX_MOMENT_ORDER = 10

# Keep theta-by-mode blocks around a few MB
_BLOCK_ELEMENTS = 1 << 18

_p = sympy.Symbol("p")


# ---------------------------------------------------------
# BERNOULLI FACTORS
# ---------------------------------------------------------
def bernoulli_factors(probs, pairing=Pairing.INDEPENDENT):
    """
    Expands stored positive-k probabilities into Bernoulli factors.

    Returns (p, step): independent pairing doubles every p_k (one factor for +k and
    one for -k, step 1); paired pairing keeps one factor per pair worth 2 kinks.
    """
    pairing = Pairing(pairing)
    if pairing is Pairing.INDEPENDENT:
        return np.repeat(probs.p, 2), 1
    return np.asarray(probs.p), 2


def _source(probs, pairing, construction):
    return {
        "method": probs.method.value,
        "tau_Q": probs.tau_Q,
        "N": probs.params.N,
        "pairing": Pairing(pairing).value,
        "construction": construction,
    }


# ---------------------------------------------------------
# CHARACTERISTIC FUNCTION
# ---------------------------------------------------------
def _factor_product(thetas, p, step):
    thetas = np.asarray(thetas, dtype=float)
    phase = np.exp(1j * step * thetas) - 1.0
    out = np.empty(len(thetas), dtype=complex)
    block = max(1, _BLOCK_ELEMENTS // max(1, len(p)))
    for start in range(0, len(thetas), block):
        chunk = phase[start:start + block]
        out[start:start + block] = np.prod(1.0 + chunk[:, None] * p[None, :], axis=1)
    return out


def characteristic_function(theta, probs, pairing=Pairing.INDEPENDENT):
    """
    Product over the full grid {+-k} of [1 + (e^{i theta} - 1) p_k].

    Accepts a scalar or an array of angles.
    """
    pairing = Pairing(pairing)
    scalar = np.ndim(theta) == 0
    thetas = np.atleast_1d(theta)
    if pairing is Pairing.INDEPENDENT:
        values = _factor_product(thetas, np.asarray(probs.p), 1) ** 2
    else:
        values = _factor_product(thetas, np.asarray(probs.p), 2)
    return complex(values[0]) if scalar else values


# ---------------------------------------------------------
# DISTRIBUTION CONSTRUCTIONS
# ---------------------------------------------------------
def _cleanup(raw, step):
    """Drops float residue from an inverted pmf, or raises if it is more than noise."""
    residue = float(np.max(np.abs(raw.imag))) if np.iscomplexobj(raw) else 0.0
    if residue > IMAG_RESIDUE_LIMIT:
        raise NumericalFault(f"Imaginary residue {residue:.3e} after inversion")
    P = np.array(raw.real, dtype=float)

    if step > 1:
        off_lattice = np.arange(len(P)) % step != 0
        stray = float(np.max(np.abs(P[off_lattice]), initial=0.0))
        if stray > NEGATIVE_ZERO_WINDOW:
            raise NumericalFault(f"Probability {stray:.3e} on odd kink numbers under paired modes")
        P[off_lattice] = 0.0

    lowest = float(P.min())
    if lowest < -NEGATIVE_ZERO_WINDOW:
        raise NumericalFault(f"Negative probability {lowest:.3e} after inversion")
    P[P < 0.0] = 0.0

    total = math.fsum(P)
    if abs(total - 1.0) > NORMALIZATION_RESIDUE:
        raise NumericalFault(f"Normalization residue {total - 1.0:.3e}")
    return P / total


def poisson_binomial_pmf(p, step=1):
    """Sum of Bernoulli(p_i) * step, inverted from the characteristic function by DFT."""
    p = np.asarray(p, dtype=float)
    size = step * len(p) + 1
    thetas = 2.0 * math.pi * np.arange(size) / size
    values = _factor_product(thetas, p, step)
    # fft computes sum_j x_j exp(-2 pi i j n / size)
    return _cleanup(np.fft.fft(values) / size, step)


def poisson_binomial_pmf_convolution(p, step=1):
    """Same distribution by folding one Bernoulli factor at a time."""
    p = np.asarray(p, dtype=float)
    P = np.zeros(step * len(p) + 1)
    P[0] = 1.0
    filled = 1
    for p_i in p:
        folded = P[:filled] * p_i
        P[:filled] *= 1.0 - p_i
        P[step:filled + step] += folded
        filled += step
    return P


def kink_distribution(probs, pairing=Pairing.INDEPENDENT):
    p, step = bernoulli_factors(probs, pairing)
    P = poisson_binomial_pmf(p, step)
    return KinkDistribution(P, pairing, _source(probs, pairing, "dft"))


def kink_distribution_convolution(probs, pairing=Pairing.INDEPENDENT):
    p, step = bernoulli_factors(probs, pairing)
    P = poisson_binomial_pmf_convolution(p, step)
    return KinkDistribution(P, pairing, _source(probs, pairing, "convolution"))


# ---------------------------------------------------------
# CUMULANTS
# ---------------------------------------------------------
@functools.lru_cache(maxsize=None)
def _polynomials(qmax):
    polys = [sympy.Poly(_p, _p, domain="ZZ")]
    for _ in range(qmax - 1):
        f = polys[-1].as_expr()
        polys.append(sympy.Poly(sympy.expand(_p * (1 - _p) * sympy.diff(f, _p)), _p, domain="ZZ"))
    return tuple(polys)


def cumulant_polynomials(qmax):
    """f_1(p) = p, f_{q+1} = p(1-p) f_q'(p), as integer sympy polynomials in p."""
    if isinstance(qmax, bool) or not isinstance(qmax, int) or qmax < 1:
        raise ParameterError(f"qmax must be a positive integer, got {qmax!r}")
    if qmax > MAX_POLYNOMIAL_ORDER:
        raise UnsupportedOrderError(f"qmax={qmax} exceeds {MAX_POLYNOMIAL_ORDER}")
    return list(_polynomials(qmax))


def polynomial_coefficients(poly):
    """Ascending integer coefficients c_0, c_1, ... of a cumulant polynomial."""
    return [int(c) for c in reversed(poly.all_coeffs())]


def cumulants_exact(probs, qmax, pairing=Pairing.INDEPENDENT):
    """kappa_q = 2 sum_{k>0} f_q(p_k), summed with math.fsum."""
    if Pairing(pairing) is not Pairing.INDEPENDENT:
        raise ParameterError("The cumulant recursion assumes independent Bernoulli modes; "
                             "use distribution_cumulants for paired modes")
    p = np.asarray(probs.p, dtype=float)
    kappa = []
    for poly in cumulant_polynomials(qmax):
        coeffs = np.array(polynomial_coefficients(poly), dtype=float)
        values = np.polynomial.polynomial.polyval(p, coeffs)
        kappa.append(2.0 * math.fsum(values))
    return CumulantReport(tuple(kappa), "recursion", _source(probs, pairing, "recursion"))


def _check_moment_order(qmax):
    if qmax < 1:
        raise ParameterError(f"qmax must be >= 1, got {qmax}")
    if qmax > MAX_MOMENT_ORDER:
        raise UnsupportedOrderError(f"Moment path limited to q <= {MAX_MOMENT_ORDER}, got {qmax}")


def moments_from_distribution(dist, qmax, shift=0.0):
    """Raw moments sum_n (n - shift)^q P(n), q = 1..qmax."""
    _check_moment_order(qmax)
    n = dist.support.astype(float) - shift
    P = dist.probabilities
    return [math.fsum(n ** q * P) for q in range(1, qmax + 1)]


def cumulants_from_moments(moments, shift=0.0):
    """
    kappa_q = mu'_q - sum_{m=1}^{q-1} C(q-1, m-1) kappa_m mu'_{q-m}.

    `shift` is the origin the moments were taken about; it is added back to kappa_1.
    """
    _check_moment_order(len(moments))
    mu = [1.0, *moments]
    kappa = []
    for q in range(1, len(moments) + 1):
        value = mu[q] - math.fsum(
            math.comb(q - 1, m - 1) * kappa[m - 1] * mu[q - m] for m in range(1, q)
        )
        kappa.append(value)
    kappa[0] += shift
    return CumulantReport(tuple(kappa), "moments")


def distribution_cumulants(dist, qmax):
    """Moment path taken about the mean, where raw powers stay small."""
    shift = dist.mean()
    report = cumulants_from_moments(moments_from_distribution(dist, qmax, shift), shift)
    return CumulantReport(report.kappa, "moments", dict(dist.source))


# ---------------------------------------------------------
# POISSON COMPARISON
# ---------------------------------------------------------
class LeCamDiagnostic(NamedTuple):
    """Le Cam's bound 2 sum p_k^2 and sum_n |P(n) - Poisson(n)| over all n >= 0."""
    bound: float
    tv_to_poisson: float


def le_cam_diagnostic(probs, pairing=Pairing.INDEPENDENT):
    if Pairing(pairing) is not Pairing.INDEPENDENT:
        raise ParameterError("Le Cam's bound applies to independent Bernoulli modes only")
    p = np.asarray(probs.p, dtype=float)
    bound = 4.0 * math.fsum(p ** 2)
    mean = 2.0 * math.fsum(p)

    dist = kink_distribution(probs, pairing)
    n = dist.support
    if mean == 0.0:
        poisson = (n == 0).astype(float)
    else:
        poisson = stats.poisson.pmf(n, mean)
    # P(n) = 0 above N, so the Poisson tail counts in full
    tail = float(stats.poisson.sf(n[-1], mean)) if mean > 0.0 else 0.0
    tv = math.fsum(np.abs(dist.probabilities - poisson)) + tail
    return LeCamDiagnostic(bound, tv)
