# kinkstats/models/chain.py
import math
import numbers
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError

CRITICAL_FIELD = 1.0


def validate_chain_size(N):
    """Even-parity sector on a ring: N must be an even integer >= 2."""
    if isinstance(N, bool) or not isinstance(N, numbers.Integral):
        raise ParameterError(f"N must be an integer, got {N!r}")
    if N < 2:
        raise ParameterError(f"N must be >= 2, got {N}")
    if N % 2:
        raise ParameterError(f"N must be even, got {N}")
    return int(N)


def _positive(name, value):
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ParameterError(f"{name} must be a positive finite number, got {value!r}")
    return value


@dataclass(frozen=True)
class ChainParams:
    """Physical constants of a periodic transverse-field Ising ring of N spins."""
    N: int
    J: float = 1.0
    hbar: float = 1.0
    g_c: float = field(default=CRITICAL_FIELD, init=False)

    def __post_init__(self):
        object.__setattr__(self, "N", validate_chain_size(self.N))
        object.__setattr__(self, "J", _positive("J", self.J))
        object.__setattr__(self, "hbar", _positive("hbar", self.hbar))

    def as_dict(self):
        return {"N": self.N, "J": self.J, "hbar": self.hbar}


@dataclass(frozen=True)
class QuenchProtocol:
    """Linear ramp g(t) = 1 - t/tau_Q from t = -a*tau_Q to t = +tau_Q."""
    tau_Q: float
    start_factor: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "tau_Q", _positive("tau_Q", self.tau_Q))
        a = float(self.start_factor)
        if not math.isfinite(a) or a < 1.0:
            raise ParameterError(f"start_factor must be >= 1, got {self.start_factor!r}")
        object.__setattr__(self, "start_factor", a)

    @property
    def start_time(self):
        return -self.start_factor * self.tau_Q

    @property
    def end_time(self):
        return self.tau_Q


@dataclass(frozen=True, eq=False)
class ModeGrid:
    """The N/2 positive wavevectors k = (2l-1)pi/N, ascending; the full set is {+-k}."""
    momenta: np.ndarray

    def __post_init__(self):
        momenta = np.array(self.momenta, dtype=float)
        momenta.setflags(write=False)
        object.__setattr__(self, "momenta", momenta)

    def __len__(self):
        return len(self.momenta)

    def __iter__(self):
        return iter(self.momenta)

    def __eq__(self, other):
        return isinstance(other, ModeGrid) and np.array_equal(self.momenta, other.momenta)

    __hash__ = None

    def full_set(self):
        """All N allowed momenta, ascending."""
        return np.concatenate((-self.momenta[::-1], self.momenta))
