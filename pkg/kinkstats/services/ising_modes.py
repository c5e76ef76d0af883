# kinkstats/services/ising_modes.py
"""
Momentum-space decomposition of the periodic transverse-field Ising ring.

Each positive k carries an independent two-level block
H_k = J * (h_z sigma^z + h_x sigma^x), h_z = 2(g - cos k), h_x = 2 sin k,
written in the fixed basis psi_k = (c_k^dagger, c_-k).
"""
import math

import numpy as np

from ..errors import ParameterError
from ..models import ModeGrid, validate_chain_size

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


def momentum_grid(params):
    N = validate_chain_size(params.N)
    ell = np.arange(1, N // 2 + 1)
    return ModeGrid((2 * ell - 1) * math.pi / N)


def magnetic_field(t, protocol):
    return 1.0 - t / protocol.tau_Q


def mode_field_coefficients(k, g):
    """(h_z, h_x) of the 2x2 block, in units of J. Vectorizes over k."""
    return 2.0 * (g - np.cos(k)), 2.0 * np.sin(k)


def mode_hamiltonian(k, g, J=1.0):
    h_z, h_x = mode_field_coefficients(k, g)
    return J * (h_z * SIGMA_Z + h_x * SIGMA_X)


def eigenvectors(momenta, g):
    """
    Vectorized eigen-decomposition of the blocks at field g.

    Returns (E, ground, excited) with ground/excited of shape (m, 2).
    Phase convention: first component real and >= 0.
    """
    h_z, h_x = mode_field_coefficients(np.asarray(momenta, dtype=float), g)
    h_z = np.broadcast_to(h_z, np.shape(h_x)).astype(float)
    E = np.hypot(h_z, h_x)

    # Two algebraically equal forms of the -E eigenvector; pick the one without cancellation
    upper = h_z >= 0
    a = np.where(upper, h_x, E - h_z)
    b = np.where(upper, -(h_z + E), -h_x)
    norm = np.hypot(a, b)
    ground = np.stack((a / norm, b / norm), axis=-1)
    excited = np.stack((-b / norm, a / norm), axis=-1)
    return E, ground, excited


def instantaneous_eigensystem(k, g):
    if not (0.0 < k < math.pi):
        raise ParameterError(f"k must lie strictly inside (0, pi), got {k!r}")
    E, ground, excited = eigenvectors(np.array([k]), g)
    return float(E[0]), ground[0], excited[0]
