# kinkstats/cli/settings.py
"""
Run configuration: built-in defaults < Config (environment) < --config file < flags.
The resolved RunConfig is echoed into every artifact.
"""
import logging
from dataclasses import asdict, dataclass

from dotenv import dotenv_values

from ..errors import ParameterError
from ..models import ChainParams, Method, Pairing, SolverConfig
from ..services.scaling import log_spaced_taus

log = logging.getLogger(__name__)


def _split(value):
    if isinstance(value, (list, tuple)):
        return list(value)
    return [part.strip() for part in str(value).split(",") if part.strip()]


def _int_list(value):
    return [int(v) for v in _split(value)]


def _float_list(value):
    return [float(v) for v in _split(value)]


def _tau_grid(value):
    if isinstance(value, (list, tuple)):
        lo, hi, points = value
    else:
        parts = str(value).split(":")
        if len(parts) != 3:
            raise ValueError("expected lo:hi:points")
        lo, hi, points = parts
    return float(lo), float(hi), int(points)


def _tau_range(value):
    if isinstance(value, (list, tuple)):
        lo, hi = value
    else:
        parts = str(value).split(":")
        if len(parts) != 2:
            raise ValueError("expected lo:hi")
        lo, hi = parts
    lo, hi = float(lo), float(hi)
    if not lo <= hi:
        raise ValueError(f"empty range {lo}:{hi}")
    return lo, hi


def _optional(parser):
    def parse(value):
        if value is None or value == "":
            return None
        return parser(value)
    return parse


PARSERS = {
    "n": _int_list,
    "j": float,
    "hbar": float,
    "tau": _optional(_float_list),
    "tau_grid": _optional(_tau_grid),
    "method": lambda v: Method(str(v).lower()),
    "pairing": lambda v: Pairing(str(v).lower()),
    "qmax": int,
    "abs_tol": float,
    "rel_tol": float,
    "start_factor": float,
    "out": str,
    "cache_dir": str,
    "workers": int,
    "tau_range": _optional(_tau_range),
    "log_level": lambda v: str(v).upper(),
}

DEFAULTS = {
    "n": "400",
    "j": 1.0,
    "hbar": 1.0,
    "tau": None,
    "tau_grid": None,
    "method": "lz",
    "pairing": "independent",
    "qmax": 4,
    "abs_tol": 1e-10,
    "rel_tol": 1e-10,
    "start_factor": 1.0,
    "out": "output",
    "cache_dir": ".kinkstats-cache",
    "workers": 1,
    "tau_range": None,
    "log_level": "INFO",
}


@dataclass(frozen=True)
class RunConfig:
    n: list
    j: float
    hbar: float
    tau: list | None
    tau_grid: tuple | None
    method: Method
    pairing: Pairing
    qmax: int
    abs_tol: float
    rel_tol: float
    start_factor: float
    out: str
    cache_dir: str
    workers: int
    tau_range: tuple | None
    log_level: str

    def __post_init__(self):
        if not self.n:
            raise ParameterError("At least one chain size is required")
        if self.qmax < 1:
            raise ParameterError(f"qmax must be >= 1, got {self.qmax}")
        if self.workers < 1:
            raise ParameterError(f"workers must be >= 1, got {self.workers}")

    def taus(self):
        """Explicit --tau values, else the log-spaced --tau-grid."""
        if self.tau:
            return list(self.tau)
        if self.tau_grid:
            return log_spaced_taus(*self.tau_grid)
        raise ParameterError("No quench times given: pass --tau or --tau-grid lo:hi:points")

    def chain(self, N):
        return ChainParams(N=N, J=self.j, hbar=self.hbar)

    def solver(self):
        return SolverConfig(abs_tol=self.abs_tol, rel_tol=self.rel_tol)

    def as_dict(self):
        data = asdict(self)
        data["method"] = self.method.value
        data["pairing"] = self.pairing.value
        if self.tau_grid:
            data["tau_grid"] = ":".join(str(v) for v in self.tau_grid)
        if self.tau_range:
            data["tau_range"] = ":".join(str(v) for v in self.tau_range)
        return data


def _normalize_key(key):
    return key.strip().lower().replace("-", "_")


def _parse(source, values):
    parsed = {}
    for key, value in values.items():
        name = _normalize_key(key)
        if name not in PARSERS:
            raise ParameterError(f"Unknown configuration key {key!r} in {source}")
        try:
            parsed[name] = PARSERS[name](value)
        except (TypeError, ValueError) as e:
            raise ParameterError(f"Invalid value {value!r} for {key!r} in {source}: {e}")
    return parsed


def environment_defaults(config_class):
    return {
        "out": config_class.OUTPUT_DIR,
        "cache_dir": config_class.CACHE_DIR,
        "log_level": config_class.LOG_LEVEL,
        "workers": config_class.WORKERS,
    }


def resolve_run_config(config_class, config_file=None, **flags):
    """Layers the four sources; flags left at None do not override anything."""
    values = _parse("defaults", DEFAULTS)

    # 1. Environment via Config
    values.update(_parse("environment", environment_defaults(config_class)))

    # 2. Config file
    if config_file:
        file_values = {k: v for k, v in dotenv_values(config_file).items() if v is not None}
        values.update(_parse(config_file, file_values))
        log.debug(f"Loaded {len(file_values)} settings from {config_file}")

    # 3. Explicit flags
    values.update(_parse("command line", {k: v for k, v in flags.items() if v is not None}))

    # An explicit tau list wins over a grid coming from a lower layer, and vice versa
    if flags.get("tau") is not None:
        values["tau_grid"] = None
    elif flags.get("tau_grid") is not None:
        values["tau"] = None

    return RunConfig(**values)
