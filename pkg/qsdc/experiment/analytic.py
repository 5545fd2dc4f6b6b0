"""
Closed-form references for the Monte Carlo estimates, and the resource
comparison between one-way and two-step direct communication.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from qsdc.adversary.attacks import AttackKind, AttackSpec
from qsdc.errors import ConfigurationError
from qsdc.protocol.engine import ProtocolConfig, Variant, check_set_size


@dataclass(frozen=True)
class NoClosedForm:
    reason: str


Analytic = Union[float, NoClosedForm]


def measure_resend_detection(check_size: int, epsilon: float = 0.0) -> float:
    """
    Abort probability when every C-set outcome is wrong with probability 1/2.

    The run passes when at most ``epsilon * check_size`` of the slots are wrong.
    """
    if check_size < 1:
        raise ConfigurationError(f"check set size must be at least 1, got {check_size}", key="check_fraction")
    passing = sum(math.comb(check_size, k) for k in range(check_size + 1) if k / check_size <= epsilon)
    return 1.0 - passing / 2**check_size


def trojan_pns_detection(sample_fraction: float, n_pairs: int) -> float:
    """
    Abort probability of the splitter check against one extra in-window photon
    per pulse: each pulse is sampled with probability s and then shows a
    coincidence half the time.
    """
    return 1.0 - (1.0 - sample_fraction / 2) ** n_pairs


def _spy_reaches_device(attack: AttackSpec, protocol: ProtocolConfig) -> bool:
    device = protocol.device
    if attack.kind is AttackKind.DELAY:
        return attack.delay < device.time_window
    if attack.kind is AttackKind.IPE:
        if protocol.variant is Variant.IMPROVED:
            return attack.ipe_detuning * device.fidelity_sigma <= device.filter_passband
        return True
    return False


def analytic_detection(
    attack: AttackSpec, protocol: ProtocolConfig, check_size: Optional[int] = None
) -> Analytic:
    """
    Detection probability of ``attack`` against ``protocol`` where one is known.

    Args:
        attack: Attack descriptor
        protocol: Protocol configuration
        check_size: |C| to use for measure-resend; derived from ``n_pairs`` for the
            original variant, required for the improved one because its survivors
            are random

    Returns:
        The probability, or NoClosedForm saying why there is none
    """
    if attack.kind is AttackKind.NONE:
        return 0.0

    if attack.kind is AttackKind.MEASURE_RESEND:
        if check_size is None:
            if protocol.variant is Variant.IMPROVED:
                return NoClosedForm("improved variant: |C| depends on the PNS sample")
            check_size = check_set_size(protocol.n_pairs, protocol.check_fraction)
        return measure_resend_detection(check_size, protocol.error_threshold)

    # Trojan photons never disturb the legitimate pairs.
    if protocol.variant is Variant.ORIGINAL:
        return 0.0
    if not _spy_reaches_device(attack, protocol):
        return 0.0
    if protocol.multiphoton_threshold > 0:
        return NoClosedForm("multiphoton threshold above 0")
    return trojan_pns_detection(protocol.device.pns_sample_fraction, protocol.n_pairs)


def analytic_recovery(attack: AttackSpec, protocol: ProtocolConfig) -> Analytic:
    """
    Expected fraction of message symbols Eve gets right in an undetected run,
    for a uniformly random message.
    """
    if attack.kind is AttackKind.NONE:
        return 0.0
    if attack.kind is AttackKind.MEASURE_RESEND:
        return 0.25
    if not _spy_reaches_device(attack, protocol):
        # Filtered spy photons never come back; out-of-window ones decode as U0.
        return 0.0 if attack.kind is AttackKind.IPE else 0.25
    f = attack.apply_probability
    return f + (1.0 - f) / 4


class StorageScheme(Enum):
    ONE_WAY = "one-way"
    TWO_STEP = "two-step"


@dataclass(frozen=True)
class StorageCost:
    scheme: StorageScheme
    particles_stored: int
    storage_time: float  # in units of the one-way transmission time t


def _check_size(n: int) -> None:
    if n < 1:
        raise ConfigurationError(f"N must be at least 1, got {n}", key="n_pairs")


def storage_cost(scheme: StorageScheme, n: int, t: float = 1.0) -> StorageCost:
    """Quantum memory the receiver needs: (2N, 4t) one-way, (N, 2t) two-step."""
    _check_size(n)
    if t <= 0:
        raise ConfigurationError(f"t must be positive, got {t}", key="t")
    if scheme is StorageScheme.ONE_WAY:
        return StorageCost(scheme, 2 * n, 4 * t)
    return StorageCost(scheme, n, 2 * t)


def intercept_exposure(scheme: StorageScheme, n: int) -> int:
    """Particles that cross the channel, and so can be intercepted: 2N either way."""
    _check_size(n)
    return 2 * n
