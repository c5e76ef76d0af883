import numpy as np
import pytest
from click.testing import CliRunner

from config import Config
from kinkstats.cli import create_cli
from kinkstats.models import ChainParams, ModeProbabilities
from kinkstats.services.mode_dynamics import quench


@pytest.fixture
def chain400():
    return ChainParams(N=400)


@pytest.fixture
def lz_probs():
    """LZ probabilities on the default J = hbar = 1 chain."""
    def build(N, tau_Q):
        return quench(ChainParams(N=N), tau_Q)
    return build


@pytest.fixture
def random_probs():
    rng = np.random.default_rng(20240517)

    def draw(m):
        return ModeProbabilities.from_values(rng.uniform(0.0, 1.0, size=m))
    return draw


@pytest.fixture
def config_class(tmp_path):
    class TestConfig(Config):
        CACHE_DIR = str(tmp_path / "cache")
        OUTPUT_DIR = str(tmp_path / "out")
        LOG_LEVEL = "WARNING"
        WORKERS = 1
    return TestConfig


@pytest.fixture
def cli(config_class):
    return create_cli(config_class)


@pytest.fixture
def runner():
    return CliRunner()
