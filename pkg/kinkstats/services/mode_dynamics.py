# kinkstats/services/mode_dynamics.py
import logging
import math

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import NumericalFault, ParameterError, SolverError
from ..models import MAGNUS, Method, ModeProbabilities, QuenchProtocol, SolverConfig
from .ising_modes import eigenvectors, magnetic_field, mode_field_coefficients, momentum_grid

log = logging.getLogger(__name__)

CLAMP_WINDOW = 1e-12
NORM_DRIFT_LIMIT = 1e-8
# Phase per step at the fastest frequency is MAGNUS_PHASE_SCALE * tol^(1/4)
MAGNUS_PHASE_SCALE = 10.0
# (step, mode) pairs held in memory at once
MAGNUS_CHUNK = 1 << 16
_SMALLEST_NORMAL = np.finfo(float).tiny


# ---------------------------------------------------------
# LANDAU-ZENER CLOSED FORM
# ---------------------------------------------------------
def excitation_probability_lz(k, params, tau_Q):
    """
    p_k = exp(-2 pi J tau_Q k^2 / hbar). Vectorizes over k.
    Values below the smallest normal double are flushed to exactly 0.
    """
    if not tau_Q > 0:
        raise ParameterError(f"tau_Q must be positive, got {tau_Q!r}")
    k = np.asarray(k, dtype=float)
    p = np.exp(-2.0 * math.pi * params.J * tau_Q * k ** 2 / params.hbar)
    p = np.where(p < _SMALLEST_NORMAL, 0.0, p)
    return float(p) if p.ndim == 0 else p


# ---------------------------------------------------------
# SCHRODINGER INTEGRATION
# ---------------------------------------------------------
def _magnus_step(t_start, t_end, params, protocol, solver):
    """
    Step size for the Magnus scheme. The global error scales as (omega h)^4 independently
    of tau_Q, so h follows the fastest precession frequency on the interval.
    """
    g_max = max(abs(magnetic_field(t_start, protocol)), abs(magnetic_field(t_end, protocol)))
    omega = 2.0 * params.J * (g_max + 1.0) / params.hbar
    tol = min(solver.abs_tol, solver.rel_tol)
    h = min(MAGNUS_PHASE_SCALE * tol ** 0.25 / omega, solver.max_step)
    n_steps = max(1, math.ceil(abs(t_end - t_start) / h))
    return (t_end - t_start) / n_steps, n_steps


def _step_unitaries(momenta, t_mid, h, params, protocol):
    """
    exp(-i w.sigma) for every (step, mode) pair, shape (n, m, 2, 2).

    For the linear ramp the fourth-order Magnus exponent is exact up to O(h^5):
    w = (h/hbar) v_mid - (h^3 / 6 hbar^2) (v_mid x dv/dt) with v = J (h_x, 0, h_z).
    """
    h_z, h_x = mode_field_coefficients(momenta[None, :], magnetic_field(t_mid, protocol)[:, None])
    rate = h / params.hbar
    w_x = rate * params.J * h_x
    w_z = rate * params.J * h_z
    # dh_z/dt = -2 / tau_Q; only the y component survives the cross product
    w_y = -(rate ** 3) * params.hbar * params.J ** 2 * h_x * (2.0 / protocol.tau_Q) / 6.0

    angle = np.sqrt(w_x ** 2 + w_y ** 2 + w_z ** 2)
    c = np.cos(angle)
    s = np.sinc(angle / math.pi)

    u = np.empty(w_z.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = c - 1j * s * w_z
    u[..., 0, 1] = -1j * s * w_x - s * w_y
    u[..., 1, 0] = -1j * s * w_x + s * w_y
    u[..., 1, 1] = c + 1j * s * w_z
    return u


def _ordered_product(u):
    """U[n-1] ... U[1] U[0] by pairwise reduction along the first axis."""
    while len(u) > 1:
        if len(u) % 2:
            u = np.concatenate((u[1:-1:2] @ u[0:-1:2], u[-1:]))
        else:
            u = u[1::2] @ u[0::2]
    return u[0]


def _propagate_magnus(momenta, states, t_start, t_end, params, protocol, solver):
    h, n_steps = _magnus_step(t_start, t_end, params, protocol, solver)
    chunk = max(1, MAGNUS_CHUNK // len(momenta))
    psi = states[:, :, None]
    for first in range(0, n_steps, chunk):
        steps = np.arange(first, min(first + chunk, n_steps), dtype=float)
        t_mid = t_start + (steps + 0.5) * h
        psi = _ordered_product(_step_unitaries(momenta, t_mid, h, params, protocol)) @ psi

    psi = psi[:, :, 0]
    if not np.all(np.isfinite(psi)):
        bad = int(np.argmax(~np.isfinite(psi).all(axis=1)))
        raise SolverError("Mode integration produced non-finite amplitudes",
                          k=float(momenta[bad]), tau_Q=protocol.tau_Q)
    return psi


def _schrodinger_rhs(momenta, params, protocol):
    m = len(momenta)
    cos_k = np.cos(momenta)
    h_x = 2.0 * np.sin(momenta)
    rate = params.J / params.hbar

    def rhs(t, y):
        a, b = y[:m], y[m:]
        h_z = 2.0 * (magnetic_field(t, protocol) - cos_k)
        return -1j * rate * np.concatenate((h_z * a + h_x * b, h_x * a - h_z * b))

    return rhs


def propagate(momenta, states, t_start, t_end, params, protocol, solver):
    """
    Integrates i hbar d|psi>/dt = H_k(g(t)) |psi> for every k at once.

    `states` has shape (m, 2) in the sigma^z basis. Returns the raw (not renormalized)
    final states; an empty interval returns a copy of the input unchanged.
    The default "magnus4" scheme is unitary step by step; the solve_ivp pairs are not.
    """
    momenta = np.atleast_1d(np.asarray(momenta, dtype=float))
    states = np.asarray(states, dtype=complex).reshape(len(momenta), 2)
    if t_start == t_end:
        return states.copy()
    if solver.method == MAGNUS:
        return _propagate_magnus(momenta, states, t_start, t_end, params, protocol, solver)

    m = len(momenta)
    y0 = np.concatenate((states[:, 0], states[:, 1]))
    # Error control is an RMS over components: tighten by sqrt(m) to keep the per-mode contract
    scale = math.sqrt(m)
    sol = solve_ivp(
        _schrodinger_rhs(momenta, params, protocol),
        (t_start, t_end),
        y0,
        method=solver.method,
        rtol=solver.rel_tol / scale,
        atol=solver.abs_tol / scale,
        max_step=solver.max_step,
        first_step=solver.initial_step,
    )
    if not sol.success:
        k_context = float(momenta[0]) if m == 1 else f"[{momenta[0]:.6g}..{momenta[-1]:.6g}]"
        raise SolverError(f"Mode integration failed: {sol.message}", k=k_context, tau_Q=protocol.tau_Q)

    y = sol.y[:, -1]
    return np.stack((y[:m], y[m:]), axis=-1)


def _evolve_batch(momenta, params, protocol, solver):
    """Returns (renormalized final states, max pre-renormalization norm drift)."""
    g_start = magnetic_field(protocol.start_time, protocol)
    _, ground, _ = eigenvectors(momenta, g_start)
    final = propagate(momenta, ground, protocol.start_time, protocol.end_time, params, protocol, solver)

    norms = np.sum(np.abs(final) ** 2, axis=1)
    drift = np.abs(norms - 1.0)
    worst = int(np.argmax(drift))
    if drift[worst] > NORM_DRIFT_LIMIT:
        raise SolverError(
            f"Norm drift {drift[worst]:.3e} exceeds {NORM_DRIFT_LIMIT:g}",
            k=float(momenta[worst]), tau_Q=protocol.tau_Q
        )
    return final / np.sqrt(norms)[:, None], float(drift[worst])


def evolve_mode(k, params, protocol, solver=None):
    """Final state at t = +tau_Q of the mode started in its ground state at t = -a tau_Q."""
    if not (0.0 < k < math.pi):
        raise ParameterError(f"k must lie strictly inside (0, pi), got {k!r}")
    states, _ = _evolve_batch(np.array([k], dtype=float), params, protocol, solver or SolverConfig())
    return states[0]


def _clamp(p, momenta, tau_Q):
    outside = (p < -CLAMP_WINDOW) | (p > 1.0 + CLAMP_WINDOW)
    if np.any(outside):
        bad = int(np.argmax(outside))
        raise NumericalFault(f"Probability {p[bad]!r} outside [0, 1] at k={momenta[bad]!r}, tau_Q={tau_Q!r}")
    return np.clip(p, 0.0, 1.0)


def _project_excited(momenta, states, protocol):
    g_end = magnetic_field(protocol.end_time, protocol)
    _, _, excited = eigenvectors(momenta, g_end)
    overlap = np.sum(excited * states, axis=1)
    return np.abs(overlap) ** 2


def excitation_probability_numeric(k, params, protocol, solver=None):
    """p_k = |<excited(k, g=0)|psi(tau_Q)>|^2."""
    psi = evolve_mode(k, params, protocol, solver)
    momenta = np.array([k], dtype=float)
    p = _project_excited(momenta, psi[None, :], protocol)
    return float(_clamp(p, momenta, protocol.tau_Q)[0])


def _numeric_probabilities(momenta, params, protocol, solver):
    try:
        states, drift = _evolve_batch(momenta, params, protocol, solver)
    except SolverError as e:
        log.warning(f"Batch integration failed ({e}); retrying mode by mode")
        states, drift = _evolve_one_by_one(momenta, params, protocol, solver)
    p = _project_excited(momenta, states, protocol)
    return _clamp(p, momenta, protocol.tau_Q), drift


def _evolve_one_by_one(momenta, params, protocol, solver):
    states = np.empty((len(momenta), 2), dtype=complex)
    failures = []
    drift = 0.0
    for i, k in enumerate(momenta):
        try:
            single, single_drift = _evolve_batch(momenta[i:i + 1], params, protocol, solver)
        except SolverError as e:
            log.error(f"Mode k={k:.6g} failed: {e}")
            failures.append(float(k))
            continue
        states[i] = single[0]
        drift = max(drift, single_drift)

    if failures:
        listed = ", ".join(f"{k:.6g}" for k in failures)
        raise SolverError(f"{len(failures)} of {len(momenta)} modes failed: k in {{{listed}}}", tau_Q=protocol.tau_Q)
    return states, drift


def mode_probabilities(params, protocol, method=Method.LZ, solver=None):
    """Excitation probabilities for the full positive-k grid, in grid order."""
    method = Method(method)
    momenta = momentum_grid(params).momenta

    if method is Method.LZ:
        p = excitation_probability_lz(momenta, params, protocol.tau_Q)
        return ModeProbabilities(
            params=params, tau_Q=protocol.tau_Q, method=method, p=p,
            start_factor=protocol.start_factor,
        )

    solver = solver or SolverConfig()
    p, drift = _numeric_probabilities(momenta, params, protocol, solver)
    log.debug(f"ODE N={params.N} tau_Q={protocol.tau_Q:g}: max norm drift {drift:.2e}")
    return ModeProbabilities(
        params=params, tau_Q=protocol.tau_Q, method=method, p=p,
        start_factor=protocol.start_factor, max_norm_drift=drift,
        source={"solver": solver.cache_token()},
    )


def quench(params, tau_Q, method=Method.LZ, solver=None, start_factor=1.0):
    """Convenience wrapper building the protocol from tau_Q."""
    return mode_probabilities(params, QuenchProtocol(tau_Q, start_factor), method, solver)
