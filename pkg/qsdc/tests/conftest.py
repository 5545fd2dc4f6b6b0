import os

import numpy as np
import pytest

from qsdc.optics.channel import DeviceConfig
from qsdc.protocol.engine import ProtocolConfig, Variant


@pytest.fixture(scope="session", autouse=True)
def setup_environment_variables():
    os.environ["LOG_LEVEL"] = "WARNING"
    os.environ.pop("QSDC_SEED", None)
    os.environ.pop("QSDC_THREADS", None)


@pytest.fixture(autouse=True)
def populate_command_registry():
    """Ensure COMMAND_REGISTRY is populated for tests."""
    import cli_handlers.handlers  # noqa: F401
    from qsdc.tools.help_system import COMMAND_REGISTRY  # noqa: F401


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def device():
    return DeviceConfig()


@pytest.fixture
def original_cfg():
    return ProtocolConfig(n_pairs=16, variant=Variant.ORIGINAL, seed=7)


@pytest.fixture
def improved_cfg():
    return ProtocolConfig(n_pairs=16, variant=Variant.IMPROVED, seed=7)
