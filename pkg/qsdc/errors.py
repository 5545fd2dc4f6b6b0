"""
Exception hierarchy shared by the simulator, the experiment harness and the CLI.
"""

from typing import Optional


class QsdcError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(QsdcError, ValueError):
    """
    Invalid or inconsistent configuration.

    Args:
        message: Human readable diagnostic
        key: Name of the offending configuration key, if there is one
    """

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key

    def __reduce__(self):
        return type(self), (self.args[0], self.key)


class HarnessError(QsdcError, RuntimeError):
    """Fatal fault inside a simulated run; the run cannot be trusted."""


class RegistryCorruptionError(HarnessError):
    """A photon references a pair that no registry knows about."""


class AttackModelViolation(HarnessError):
    """An adversary hook touched a legitimate photon or reordered slots."""


class ExperimentError(HarnessError):
    """
    A trial failed and aborted the whole experiment.

    Args:
        message: Diagnostic of the underlying failure
        seed: Seed of the trial that failed, so it can be replayed
    """

    def __init__(self, message: str, seed: int):
        super().__init__(f"{message} (trial seed={seed})")
        self.message = message
        self.seed = seed

    def __reduce__(self):
        return type(self), (self.message, self.seed)


class ReportWriteError(QsdcError, OSError):
    """
    A report could not be written.

    Args:
        message: Diagnostic of the I/O failure
        path: Destination that could not be written
    """

    def __init__(self, message: str, path: str):
        super().__init__(f"{message}: {path}")
        self.path = path
