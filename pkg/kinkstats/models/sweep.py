# kinkstats/models/sweep.py
import math
from dataclasses import dataclass, field

from ..errors import ParameterError
from .probabilities import Method


@dataclass(frozen=True)
class SweepRow:
    N: int
    tau_Q: float
    method: Method
    kappa: tuple
    wall_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "tau_Q", float(self.tau_Q))
        object.__setattr__(self, "method", Method(self.method))
        kappa = tuple(float(k) for k in self.kappa)
        if not all(math.isfinite(k) for k in kappa):
            raise ParameterError(f"Non-finite cumulant in row N={self.N}, tau_Q={self.tau_Q}")
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "wall_time", float(self.wall_time))

    @property
    def key(self):
        return (self.N, self.tau_Q, self.method.value)

    def cumulant(self, q):
        return self.kappa[q - 1]

    def as_dict(self):
        return {
            "N": self.N,
            "tau_Q": self.tau_Q,
            "method": self.method.value,
            "kappa": list(self.kappa),
            "wall_time": self.wall_time,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            N=data["N"], tau_Q=data["tau_Q"], method=data["method"],
            kappa=data["kappa"], wall_time=data.get("wall_time", 0.0),
        )


@dataclass(frozen=True)
class SweepFailure:
    N: int
    tau_Q: float
    method: Method
    message: str


@dataclass
class SweepTable:
    """Rows sorted by (N, tau_Q); one row per (N, tau_Q, method)."""
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def __post_init__(self):
        rows = list(self.rows)
        self.rows = []
        for row in rows:
            self.add(row)

    def add(self, row):
        if any(existing.key == row.key for existing in self.rows):
            raise ParameterError(f"Duplicate sweep row {row.key}")
        self.rows.append(row)
        self.rows.sort(key=lambda r: (r.N, r.tau_Q, r.method.value))

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def qmax(self):
        return min((len(r.kappa) for r in self.rows), default=0)

    @property
    def ok(self):
        return not self.failures

    def select(self, N=None, method=None, tau_range=None):
        lo, hi = tau_range if tau_range else (-math.inf, math.inf)
        method = Method(method) if method is not None else None
        rows = [
            r for r in self.rows
            if (N is None or r.N == N)
            and (method is None or r.method is method)
            and lo <= r.tau_Q <= hi
        ]
        return SweepTable(rows=rows)

    def merge(self, other):
        for row in other.rows:
            self.add(row)
        self.failures.extend(other.failures)
        return self

    def sizes(self):
        return sorted({r.N for r in self.rows})

    def taus(self):
        return [r.tau_Q for r in self.rows]

    def column(self, q):
        return [r.cumulant(q) for r in self.rows]


@dataclass(frozen=True)
class FitResult:
    """kappa_q ~ amplitude * tau_Q**(-alpha) fitted on log-log axes."""
    q: int
    alpha: float
    amplitude: float
    r_squared: float
    tau_range: tuple
    n_points: int
    n_excluded: int = 0

    def as_dict(self):
        return {
            "q": self.q,
            "alpha": self.alpha,
            "amplitude": self.amplitude,
            "r_squared": self.r_squared,
            "tau_range": list(self.tau_range),
            "n_points": self.n_points,
            "n_excluded": self.n_excluded,
        }
