# kinkstats/models/probabilities.py
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError
from .chain import ChainParams

MAX_TOLERANCE = 1e-4
MAGNUS = "magnus4"
INTEGRATORS = (MAGNUS, "DOP853", "RK45", "RK23")


class Method(str, enum.Enum):
    LZ = "lz"
    ODE = "ode"


def _tolerance(name, value):
    value = float(value)
    if not (0.0 < value <= MAX_TOLERANCE):
        raise ParameterError(f"{name} must lie in (0, {MAX_TOLERANCE}], got {value!r}")
    return value


@dataclass(frozen=True)
class SolverConfig:
    """Accuracy contract for the per-mode Schrodinger integration."""
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_step: float = math.inf
    initial_step: float | None = None
    # Fourth-order Magnus with exact 2x2 exponentials, or a scipy.integrate.solve_ivp pair
    method: str = MAGNUS

    def __post_init__(self):
        object.__setattr__(self, "abs_tol", _tolerance("abs_tol", self.abs_tol))
        object.__setattr__(self, "rel_tol", _tolerance("rel_tol", self.rel_tol))
        max_step = float(self.max_step)
        if not max_step > 0:
            raise ParameterError(f"max_step must be positive, got {self.max_step!r}")
        object.__setattr__(self, "max_step", max_step)
        if self.initial_step is not None:
            initial = float(self.initial_step)
            if not (math.isfinite(initial) and initial > 0):
                raise ParameterError(f"initial_step must be positive, got {self.initial_step!r}")
            object.__setattr__(self, "initial_step", initial)
        if self.method not in INTEGRATORS:
            raise ParameterError(f"Unsupported integrator {self.method!r}")

    def cache_token(self):
        return {
            "abs_tol": self.abs_tol,
            "rel_tol": self.rel_tol,
            "max_step": None if math.isinf(self.max_step) else self.max_step,
            "initial_step": self.initial_step,
            "method": self.method,
        }


@dataclass(frozen=True, eq=False)
class ModeProbabilities:
    """Excitation probability p_k for every positive-k mode, in ModeGrid order."""
    params: ChainParams
    tau_Q: float
    method: Method
    p: np.ndarray
    start_factor: float = 1.0
    max_norm_drift: float = 0.0
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 1 or len(p) != self.params.N // 2:
            raise ParameterError(f"Expected {self.params.N // 2} mode probabilities, got shape {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
            raise ParameterError("Mode probabilities must lie in [0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "method", Method(self.method))

    def __len__(self):
        return len(self.p)

    def describe(self):
        return {
            **self.params.as_dict(),
            "tau_Q": self.tau_Q,
            "method": self.method.value,
            "start_factor": self.start_factor,
            **self.source,
        }

    @classmethod
    def from_values(cls, values, tau_Q=1.0, method=Method.LZ, J=1.0, hbar=1.0):
        """Wraps explicit positive-k probabilities (e.g. for oracles and studies)."""
        values = np.asarray(values, dtype=float)
        params = ChainParams(N=2 * len(values), J=J, hbar=hbar)
        return cls(params=params, tau_Q=tau_Q, method=method, p=values)
