# kinkstats/services/scaling.py
"""
Sweeps over tau_Q (and N), power-law fits on log-log axes, and comparisons of the
exact kink statistics with the scaling-limit theory.
"""
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..errors import KinkStatsError, ParameterError
from ..models import (
    ChainParams, FitResult, KinkDistribution, Method, Pairing, SweepFailure, SweepRow,
    SweepTable,
)
from .counting import cumulants_exact, distribution_cumulants, kink_distribution
from .mode_dynamics import quench
from .theory import (
    Regime, continuum_cumulant, kzm_density, normal_approximation, quench_regime,
    scaling_cumulant_ratio, scaling_theory,
)

log = logging.getLogger(__name__)

MIN_FIT_POINTS = 5
BREAKDOWN_TOLERANCE = 0.05
SLOW_QUENCH_FROM = 10.0


def log_spaced_taus(lo, hi, points):
    """`points` values from lo to hi, equally spaced in log tau_Q."""
    if not (0 < lo <= hi) or points < 1:
        raise ParameterError(f"Invalid tau grid {lo}:{hi}:{points}")
    if points == 1:
        return [float(lo)]
    return [float(t) for t in np.geomspace(lo, hi, int(points))]


# ---------------------------------------------------------
# SWEEPS
# ---------------------------------------------------------
def compute_row(params, tau_Q, method=Method.LZ, qmax=4, solver=None,
                pairing=Pairing.INDEPENDENT, start_factor=1.0):
    """Cumulants kappa_1..kappa_qmax for one (N, tau_Q, method) cell."""
    started = time.perf_counter()
    probs = quench(params, tau_Q, method, solver, start_factor)
    if Pairing(pairing) is Pairing.INDEPENDENT:
        report = cumulants_exact(probs, qmax)
    else:
        report = distribution_cumulants(kink_distribution(probs, pairing), qmax)
    return SweepRow(
        N=params.N, tau_Q=tau_Q, method=method, kappa=report.kappa,
        wall_time=time.perf_counter() - started,
    )


def _run_cell(cell):
    """Process-pool entry point; errors come back as values so the sweep continues."""
    params, tau_Q, options = cell
    try:
        return compute_row(params, tau_Q, **options), None
    except KinkStatsError as e:
        return None, str(e)


def _check_taus(tau_list):
    taus = [float(t) for t in tau_list]
    if not taus:
        raise ParameterError("tau_list must not be empty")
    bad = [t for t in taus if not (math.isfinite(t) and t > 0)]
    if bad:
        raise ParameterError(f"tau_Q values must be positive, got {bad}")
    return sorted(set(taus))


def sweep(params, tau_list, method=Method.LZ, qmax=4, solver=None,
          pairing=Pairing.INDEPENDENT, start_factor=1.0, cache=None, workers=1):
    """
    One row per distinct tau_Q. Failed cells are recorded in `failures` and the sweep
    carries on; cached rows are reused and new rows are written back from this process.
    """
    method = Method(method)
    options = {
        "method": method, "qmax": qmax, "solver": solver,
        "pairing": Pairing(pairing), "start_factor": start_factor,
    }
    table = SweepTable()

    # 1. Cache lookups
    pending = []
    for tau_Q in _check_taus(tau_list):
        key, row = None, None
        if cache is not None:
            key = cache.key_for(params, tau_Q, method, qmax, pairing, solver, start_factor)
            row = cache.get(key)
        if row is not None:
            log.info(f"📦 Cache hit N={params.N} tau_Q={tau_Q:g} {method.value}")
            table.add(row)
        else:
            pending.append((tau_Q, key))

    # 2. Compute the rest
    cells = [(params, tau_Q, options) for tau_Q, _ in pending]
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, cells))
    else:
        results = [_run_cell(cell) for cell in cells]

    # 3. Assemble in key order
    for (tau_Q, key), (row, error) in zip(pending, results):
        if error is not None:
            log.error(f"❌ Row N={params.N} tau_Q={tau_Q:g} {method.value} failed: {error}")
            table.failures.append(SweepFailure(params.N, tau_Q, method, error))
            continue
        log.info(f"✅ N={params.N} tau_Q={tau_Q:g} {method.value}: kappa1={row.kappa[0]:.6g} ({row.wall_time:.2f}s)")
        table.add(row)
        if cache is not None:
            cache.put(key, row)
    return table


def sweep_sizes(N_list, tau_list, method=Method.LZ, qmax=4, J=1.0, hbar=1.0, **options):
    """A single table over several chain sizes."""
    if not N_list:
        raise ParameterError("N_list must not be empty")
    table = SweepTable()
    for N in sorted(set(N_list)):
        table.merge(sweep(ChainParams(N=N, J=J, hbar=hbar), tau_list, method, qmax, **options))
    return table


def theory_columns(table, J=1.0, hbar=1.0):
    """Continuum-theory cumulants next to every row, for plotting against the data."""
    columns = []
    for row in table:
        params = ChainParams(N=row.N, J=J, hbar=hbar)
        columns.append({
            "N": row.N,
            "tau_Q": row.tau_Q,
            "method": row.method.value,
            **{f"kappa{q}": continuum_cumulant(q, params, row.tau_Q) for q in range(1, len(row.kappa) + 1)},
        })
    return columns


# ---------------------------------------------------------
# POWER-LAW FITS
# ---------------------------------------------------------
def _single_series(table, N=None, method=None, tau_range=None):
    subset = table.select(N=N, method=method, tau_range=tau_range)
    series = {(r.N, r.method.value) for r in subset}
    if len(series) > 1:
        raise ParameterError(f"Table mixes {sorted(series)}; pick one N and method")
    return subset


def fit_power_law(table, q, tau_range=None, N=None, method=None):
    """Unweighted OLS of log kappa_q on log tau_Q; kappa_q <= 0 rows are dropped and counted."""
    subset = _single_series(table, N, method, tau_range)
    if not 1 <= q <= max(subset.qmax, 1):
        raise ParameterError(f"q={q} not available in table (qmax={subset.qmax})")

    taus = np.array(subset.taus(), dtype=float)
    kappa = np.array(subset.column(q), dtype=float) if len(subset) else np.empty(0)
    positive = kappa > 0
    n_excluded = int(np.count_nonzero(~positive))
    n_points = int(np.count_nonzero(positive))
    if len(subset) and n_points == 0:
        raise ParameterError(f"All {n_excluded} rows have kappa_{q} <= 0")
    if n_points < MIN_FIT_POINTS:
        raise ParameterError(f"Need at least {MIN_FIT_POINTS} points with kappa_{q} > 0, got {n_points}")

    x = np.log(taus[positive])
    y = np.log(kappa[positive])
    if np.ptp(x) == 0.0:
        raise ParameterError("Degenerate fit: all tau_Q values are equal")

    fit = stats.linregress(x, y)
    residuals = y - (fit.intercept + fit.slope * x)
    ss_res = math.fsum(residuals ** 2)
    ss_tot = math.fsum((y - y.mean()) ** 2)
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    used = taus[positive]
    span = tuple(tau_range) if tau_range else (float(used.min()), float(used.max()))
    if n_excluded:
        log.info(f"Fit q={q}: excluded {n_excluded} rows with kappa <= 0")
    return FitResult(
        q=q,
        alpha=float(-fit.slope),
        amplitude=float(math.exp(fit.intercept)),
        r_squared=float(min(1.0, max(0.0, r_squared))),
        tau_range=span,
        n_points=n_points,
        n_excluded=n_excluded,
    )


def breakdown_tau(table, q=1, tolerance=BREAKDOWN_TOLERANCE, slow_from=SLOW_QUENCH_FROM,
                  N=None, method=None, J=1.0, hbar=1.0):
    """
    Smallest tau_Q >= slow_from where kappa_q leaves ratio_q * N d by more than
    `tolerance` (relative). None if the scaling law holds over the whole table.
    """
    subset = _single_series(table, N, method)
    ratio = scaling_cumulant_ratio(q)
    for row in subset:
        if row.tau_Q < slow_from:
            continue
        params = ChainParams(N=row.N, J=J, hbar=hbar)
        expected = ratio * params.N * kzm_density(params, row.tau_Q)
        if abs(row.cumulant(q) / expected - 1.0) > tolerance:
            return row.tau_Q
    return None


# ---------------------------------------------------------
# DISTRIBUTION COMPARISON
# ---------------------------------------------------------
@dataclass(frozen=True, eq=False)
class DistributionComparison:
    params: ChainParams
    tau_Q: float
    method: Method
    exact: KinkDistribution
    normal: np.ndarray
    tv_distance: float
    kappa1: float
    kappa2: float
    regime: Regime
    flags: tuple = ()

    @property
    def near_onset(self):
        return self.regime in (Regime.NEAR_ONSET, Regime.ADIABATIC)

    def summary(self):
        theory = scaling_theory(self.params, self.tau_Q)
        return {
            **self.params.as_dict(),
            "tau_Q": self.tau_Q,
            "method": self.method.value,
            "pairing": self.exact.mode_pairing.value,
            "kappa1": self.kappa1,
            "kappa2": self.kappa2,
            "d": theory.d,
            "normal_mean": theory.mean,
            "tv_distance": self.tv_distance,
            "regime": self.regime.value,
            "flags": list(self.flags),
        }


def compare_distribution(params, tau_Q, method=Method.LZ, solver=None,
                         pairing=Pairing.INDEPENDENT, start_factor=1.0):
    """Exact P(n) against N(Nd, 3Nd/pi^2) on n = 0..N, with TV = (1/2) sum |P - Q|."""
    method = Method(method)
    probs = quench(params, tau_Q, method, solver, start_factor)
    exact = kink_distribution(probs, pairing)
    if Pairing(pairing) is Pairing.INDEPENDENT:
        report = cumulants_exact(probs, 2)
    else:
        report = distribution_cumulants(exact, 2)

    theory = scaling_theory(params, tau_Q)
    normal = normal_approximation(params.N, theory.d).pmf_on_support(params.N)
    tv = 0.5 * math.fsum(np.abs(exact.probabilities - normal))

    regime = quench_regime(params, tau_Q)
    flags = []
    if regime is Regime.ADIABATIC:
        flags.append("adiabatic regime: normal approximation unreliable")
    elif regime is Regime.NEAR_ONSET:
        flags.append("near-onset: normal approximation unreliable")
    if report[1] == 0.0:
        flags.append("degenerate: no kinks excited, exact distribution is a point mass at 0")
    for flag in flags:
        log.warning(f"⚠️ N={params.N} tau_Q={tau_Q:g}: {flag}")

    return DistributionComparison(
        params=params, tau_Q=float(tau_Q), method=method, exact=exact, normal=normal,
        tv_distance=tv, kappa1=report[1], kappa2=report[2], regime=regime, flags=tuple(flags),
    )


# ---------------------------------------------------------
# FINITE-SIZE STUDY
# ---------------------------------------------------------
@dataclass
class FiniteSizeStudy:
    tables: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    breakdown: dict = field(default_factory=dict)

    def scaled(self, N, q):
        """(tau_Q, kappa_q / N) curve for one chain size."""
        table = self.tables[N]
        return np.array(table.taus()), np.array(table.column(q)) / N


def finite_size_study(N_list, tau_list, method=Method.LZ, qmax=4, solver=None, tau_range=None,
                      J=1.0, hbar=1.0, cache=None, workers=1):
    study = FiniteSizeStudy()
    for N in sorted(set(N_list)):
        params = ChainParams(N=N, J=J, hbar=hbar)
        table = sweep(params, tau_list, method, qmax, solver, cache=cache, workers=workers)
        study.tables[N] = table

        fits = {}
        for q in range(1, qmax + 1):
            try:
                fits[q] = fit_power_law(table, q, tau_range)
            except ParameterError as e:
                log.warning(f"No fit for N={N}, q={q}: {e}")
        study.fits[N] = fits
        study.breakdown[N] = breakdown_tau(table, 1, J=J, hbar=hbar)
        log.info(f"N={N}: breakdown tau_Q={study.breakdown[N]}")
    return study
