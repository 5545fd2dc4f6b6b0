import os

import pytest


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
def small_experiment(tmp_path):
    """A fast experiment file: 16 pairs, 20 trials."""
    path = tmp_path / "small.env"
    path.write_text("n_pairs=16\nn_trials=20\nseed=42\n")
    return str(path)
