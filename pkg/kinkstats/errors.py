# kinkstats/errors.py


class KinkStatsError(Exception):
    """Base class for every error raised by the library."""


class ParameterError(KinkStatsError, ValueError):
    """Invalid physical or numerical parameter."""


class UnsupportedOrderError(ParameterError):
    """Cumulant or polynomial order outside the supported range."""


class SolverError(KinkStatsError):
    """The ODE integrator failed or missed its accuracy contract."""

    def __init__(self, message, k=None, tau_Q=None):
        context = []
        if k is not None:
            context.append(f"k={k!r}")
        if tau_Q is not None:
            context.append(f"tau_Q={tau_Q!r}")
        if context:
            message = f"{message} ({', '.join(context)})"
        super().__init__(message)
        self.k = k
        self.tau_Q = tau_Q


class NumericalFault(KinkStatsError):
    """A result left its float-noise window (probability, residue, normalization)."""


class QuadratureError(NumericalFault):
    """Adaptive quadrature did not converge."""


class MalformedTableError(ParameterError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CacheCorruptionError(KinkStatsError):
    """A cache entry failed its content-hash check."""
