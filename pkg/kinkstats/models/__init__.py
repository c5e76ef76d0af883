from .chain import ChainParams, QuenchProtocol, ModeGrid, CRITICAL_FIELD, validate_chain_size
from .probabilities import Method, SolverConfig, ModeProbabilities, MAGNUS, INTEGRATORS
from .distribution import Pairing, KinkDistribution, CumulantReport
from .sweep import SweepRow, SweepFailure, SweepTable, FitResult
