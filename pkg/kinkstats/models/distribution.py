# kinkstats/models/distribution.py
import enum
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError


class Pairing(str, enum.Enum):
    # +k and -k are separate Bernoulli factors
    INDEPENDENT = "independent"
    # a +-k pair is excited together and contributes 2 kinks
    PAIRED = "paired"


@dataclass(frozen=True, eq=False)
class KinkDistribution:
    """P(n) for n = 0..N."""
    probabilities: np.ndarray
    mode_pairing: Pairing = Pairing.INDEPENDENT
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        P = np.array(self.probabilities, dtype=float)
        P.setflags(write=False)
        object.__setattr__(self, "probabilities", P)
        object.__setattr__(self, "mode_pairing", Pairing(self.mode_pairing))

    def __len__(self):
        return len(self.probabilities)

    @property
    def support(self):
        return np.arange(len(self.probabilities))

    def pmf(self, n):
        if 0 <= n < len(self.probabilities):
            return float(self.probabilities[n])
        return 0.0

    def mean(self):
        return float(np.dot(self.support, self.probabilities))


@dataclass(frozen=True)
class CumulantReport:
    kappa: tuple
    method: str
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        kappa = tuple(float(k) for k in self.kappa)
        if not kappa:
            raise ParameterError("CumulantReport needs at least kappa_1")
        object.__setattr__(self, "kappa", kappa)

    @property
    def qmax(self):
        return len(self.kappa)

    def __getitem__(self, q):
        """1-based access: report[1] is the mean."""
        if not 1 <= q <= self.qmax:
            raise IndexError(f"kappa_{q} not available (qmax={self.qmax})")
        return self.kappa[q - 1]

    def ratio(self, q):
        return self[q] / self[1]

    def as_dict(self):
        return {
            "method": self.method,
            "qmax": self.qmax,
            **{f"kappa{q}": value for q, value in enumerate(self.kappa, start=1)},
            **self.source,
        }
