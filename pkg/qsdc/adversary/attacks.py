"""
Eve's strategies.

An attack sees the run only through the two channel taps and the public
transcript. Spy pairs live in Eve's own registry; Bob's devices reach them
because spy photons travel inside his pulses.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from qsdc.errors import ConfigurationError
from qsdc.optics.channel import (
    ChannelAccess,
    DeviceConfig,
    Direction,
    Owner,
    PairRef,
    PairRegistry,
    Photon,
    PhotonPulse,
    RegistryBook,
    fidelity,
)
from qsdc.protocol.engine import AnnouncementKind, RunResult, Transcript
from qsdc.quantum.bell import (
    INITIAL_STATE,
    BellLabel,
    BitMapping,
    EncodeOp,
    Pure,
    bell_measure,
    decode_op,
)

logger = logging.getLogger(__name__)

SPY_NAMESPACE = "eve"


class AttackKind(Enum):
    NONE = "none"
    IPE = "ipe"
    DELAY = "delay"
    MEASURE_RESEND = "measure-resend"


@dataclass(frozen=True)
class EveReport:
    recovered_bits: Tuple[Optional[int], ...]  # None where Eve has nothing
    recovered_ops: Tuple[Optional[EncodeOp], ...]
    recovery_fraction: float  # per 2-bit symbol
    bit_recovery_fraction: float
    detected: bool


def score_recovery(
    recovered_ops: Sequence[Optional[EncodeOp]],
    bob_message: Sequence[int],
    bit_mapping: BitMapping,
    detected: bool,
) -> EveReport:
    """Compare Eve's guesses with Bob's message. Unknown symbols count as wrong."""
    truth = bit_mapping.encode(list(bob_message))
    recovered_ops = list(recovered_ops) + [None] * (len(truth) - len(recovered_ops))
    bits: List[Optional[int]] = []
    for op in recovered_ops:
        bits.extend((None, None) if op is None else bit_mapping.bits(op))

    symbols_right = sum(1 for guess, op in zip(recovered_ops, truth) if guess is op)
    bits_right = sum(1 for guess, bit in zip(bits, bob_message) if guess == bit)
    return EveReport(
        recovered_bits=tuple(bits),
        recovered_ops=tuple(recovered_ops),
        recovery_fraction=symbols_right / len(truth) if truth else 0.0,
        bit_recovery_fraction=bits_right / len(bob_message) if bob_message else 0.0,
        detected=detected,
    )


def _inject(
    pulses: Sequence[PhotonPulse], wavelength: float, delay: float, spy_registry: PairRegistry
) -> List[PhotonPulse]:
    injected = []
    for pulse in pulses:
        ref = spy_registry.create(Pure(INITIAL_STATE))
        spy = Photon(wavelength, delay, ref, Owner.SPY)
        injected.append(pulse.with_photons(pulse.photons + (spy,)))
    return injected


def ipe_inject(
    pulses_to_bob: Sequence[PhotonPulse], lambda_spy: float, spy_registry: PairRegistry
) -> List[PhotonPulse]:
    """Add one travel photon of a fresh spy pair at ``lambda_spy`` to every pulse."""
    return _inject(pulses_to_bob, lambda_spy, 0.0, spy_registry)


def _check_finite(value: float, key: str) -> None:
    if not math.isfinite(value) or value < 0:
        raise ConfigurationError(f"{key} must be finite and non-negative, got {value}", key=key)


@lru_cache(maxsize=None)
def _warn_late_delay(delay: float, time_window: float) -> None:
    # logged once per (delay, time_window)
    if delay >= time_window:
        logger.warning(
            f"delay {delay} ns is not shorter than the {time_window} ns "
            f"time window; spy photons will never be encoded"
        )


def delay_inject(
    pulses_to_bob: Sequence[PhotonPulse],
    delay: float,
    spy_registry: PairRegistry,
    lambda_legit: float = DeviceConfig.lambda_legit,
    time_window: float = DeviceConfig.time_window,
) -> List[PhotonPulse]:
    """Add one spy photon at the legitimate wavelength, ``delay`` ns behind each pulse."""
    _check_finite(delay, "delay_ns")
    _warn_late_delay(delay, time_window)
    return _inject(pulses_to_bob, lambda_legit, delay, spy_registry)


def capture_returning(
    pulses_to_alice: Sequence[PhotonPulse], spy_registry: PairRegistry
) -> Tuple[List[PhotonPulse], Dict[int, PairRef]]:
    """
    Pull Eve's photons out of the returning train.

    Returns:
        (pulses with only foreign photons left, spy pair by transmitted position)
    """
    forwarded, captured = [], {}
    for pulse in pulses_to_alice:
        mine = [p for p in pulse.photons if p.pair_ref.namespace == spy_registry.namespace]
        if not mine:
            forwarded.append(pulse)
            continue
        captured[pulse.slot_index] = mine[0].pair_ref
        forwarded.append(
            pulse.with_photons([p for p in pulse.photons if p.pair_ref.namespace != spy_registry.namespace])
        )
    return forwarded, captured


def _message_order(transcript: Transcript) -> Optional[Tuple[Tuple[int, int], ...]]:
    disclosure = transcript.latest(AnnouncementKind.M_SET_ORDER)
    return None if disclosure is None else disclosure.order


def eve_recover(
    captured: Dict[int, PairRef],
    transcript: Transcript,
    initial: BellLabel,
    spy_registry: PairRegistry,
    rng: np.random.Generator,
    bob_message: Sequence[int],
    bit_mapping: BitMapping,
) -> EveReport:
    """
    Rebuild Bob's message from captured spy pairs once he has published the M order.

    Every M slot whose spy photon never made it back is an unknown symbol.
    """
    detected = transcript.latest(AnnouncementKind.ABORT) is not None
    order = _message_order(transcript)
    if order is None:
        return score_recovery([], bob_message, bit_mapping, detected)

    ops: List[Optional[EncodeOp]] = []
    for _, position in order:
        ref = captured.get(position)
        if ref is None:
            ops.append(None)
            continue
        ops.append(decode_op(initial, bell_measure(spy_registry.get(ref), rng)))
    return score_recovery(ops, bob_message, bit_mapping, detected)


def measure_resend(
    pulses_to_alice: Sequence[PhotonPulse],
    channel: ChannelAccess,
    rng: np.random.Generator,
    outcomes: Optional[Dict[int, int]] = None,
) -> List[PhotonPulse]:
    """
    Z-measure the travel qubit of every legitimate photon and forward it.

    Outcomes are written into ``outcomes`` keyed by the pulse index seen on the
    line.
    """
    for pulse in pulses_to_alice:
        for photon in pulse.legitimate():
            bit = channel.z_measure(photon, rng)
            if outcomes is not None:
                outcomes[pulse.slot_index] = bit
    return list(pulses_to_alice)


class AttackStrategy:
    """
    Base strategy: sits on both taps and does nothing.

    Subclasses override ``intercept`` and, if they learn anything, ``recovered_ops``.
    """

    kind = AttackKind.NONE

    def __init__(self):
        self.spy_registry: Optional[PairRegistry] = None
        self.transcript: Optional[Transcript] = None
        self.rng: Optional[np.random.Generator] = None
        self.captured: Dict[int, PairRef] = {}

    def attach(self, book: RegistryBook, transcript: Transcript, rng: np.random.Generator) -> None:
        self.spy_registry = PairRegistry(SPY_NAMESPACE)
        book.add(self.spy_registry)
        self.transcript = transcript
        self.rng = rng

    def intercept(
        self, direction: Direction, pulses: List[PhotonPulse], channel: ChannelAccess
    ) -> List[PhotonPulse]:
        return pulses

    def report(self, result: RunResult, bit_mapping: Optional[BitMapping] = None) -> EveReport:
        bit_mapping = bit_mapping or BitMapping.default()
        if self.spy_registry is None:
            return score_recovery([], result.bob_message, bit_mapping, result.status.aborted)
        return eve_recover(
            self.captured,
            result.transcript,
            INITIAL_STATE,
            self.spy_registry,
            self.rng,
            result.bob_message,
            bit_mapping,
        )

    def describe(self) -> str:
        return self.kind.value


class NoAttack(AttackStrategy):
    pass


class _TrojanAttack(AttackStrategy):
    def _inject(self, pulses: List[PhotonPulse], channel: ChannelAccess) -> List[PhotonPulse]:
        raise NotImplementedError

    def intercept(self, direction, pulses, channel):
        if direction is Direction.ALICE_TO_BOB:
            return self._inject(pulses, channel)
        pulses, captured = capture_returning(pulses, self.spy_registry)
        self.captured.update(captured)
        return pulses


class InvisiblePhotonAttack(_TrojanAttack):
    kind = AttackKind.IPE

    def __init__(self, lambda_spy: float):
        super().__init__()
        _check_finite(lambda_spy, "lambda_spy")
        self.lambda_spy = lambda_spy

    def _inject(self, pulses, channel):
        return ipe_inject(pulses, self.lambda_spy, self.spy_registry)

    def describe(self) -> str:
        return f"ipe(lambda_spy={self.lambda_spy:g}nm)"


class DelayPhotonAttack(_TrojanAttack):
    kind = AttackKind.DELAY

    def __init__(self, delay: float):
        super().__init__()
        _check_finite(delay, "delay_ns")
        self.delay = delay

    def _inject(self, pulses, channel):
        return delay_inject(
            pulses, self.delay, self.spy_registry, channel.device.lambda_legit, channel.device.time_window
        )

    def describe(self) -> str:
        return f"delay({self.delay:g}ns)"


class MeasureResendAttack(AttackStrategy):
    kind = AttackKind.MEASURE_RESEND

    def __init__(self, direction: Direction = Direction.BOB_TO_ALICE):
        super().__init__()
        self.direction = direction
        self.outcomes: Dict[int, int] = {}

    def intercept(self, direction, pulses, channel):
        if direction is not self.direction:
            return pulses
        return measure_resend(pulses, channel, self.rng, self.outcomes)

    def report(self, result, bit_mapping=None):
        bit_mapping = bit_mapping or BitMapping.default()
        detected = result.transcript.latest(AnnouncementKind.ABORT) is not None
        order = _message_order(result.transcript)
        if order is None:
            return score_recovery([], result.bob_message, bit_mapping, detected)
        # Going out, pulses carry their slot; coming back, their position.
        use_slot = self.direction is Direction.ALICE_TO_BOB
        ops = []
        for slot, position in order:
            bit = self.outcomes.get(slot if use_slot else position)
            # One Z outcome on the travel qubit is uniform whatever Bob did, so
            # this guess lands on the right symbol a quarter of the time.
            ops.append(None if bit is None else EncodeOp.from_frame(bit, 0))
        return score_recovery(ops, result.bob_message, bit_mapping, detected)

    def describe(self) -> str:
        return f"measure-resend({self.direction.value})"


@dataclass(frozen=True)
class AttackSpec:
    """
    Attack descriptor of an experiment; ``build`` makes a fresh strategy per run.

    ``ipe_detuning`` is the spy wavelength offset in units of the device fidelity
    width, so ``lambda_spy = lambda_legit + ipe_detuning * fidelity_sigma``.
    """

    kind: AttackKind = AttackKind.NONE
    ipe_detuning: float = 0.1
    delay: float = 0.5  # ns
    direction: Direction = Direction.BOB_TO_ALICE
    device: DeviceConfig = field(default_factory=DeviceConfig)

    def __post_init__(self):
        _check_finite(self.ipe_detuning, "ipe_detuning")
        _check_finite(self.delay, "delay_ns")
        if self.kind is AttackKind.DELAY:
            _warn_late_delay(self.delay, self.device.time_window)
        if self.kind is AttackKind.IPE and self.ipe_detuning == 0:
            logger.warning("IPE spy wavelength equals the legitimate one; this is a delay-style attack")

    @property
    def lambda_spy(self) -> float:
        return self.device.lambda_legit + self.ipe_detuning * self.device.fidelity_sigma

    @property
    def apply_probability(self) -> float:
        """Chance that Bob's device lands its operation on one spy photon."""
        if self.kind is AttackKind.IPE:
            return fidelity(self.lambda_spy - self.device.lambda_legit, self.device.fidelity_sigma)
        if self.kind is AttackKind.DELAY:
            return 1.0 if self.delay < self.device.time_window else 0.0
        return 0.0

    def param(self) -> Optional[float]:
        if self.kind is AttackKind.IPE:
            return self.ipe_detuning
        if self.kind is AttackKind.DELAY:
            return self.delay
        return None

    def build(self) -> AttackStrategy:
        if self.kind is AttackKind.IPE:
            return InvisiblePhotonAttack(self.lambda_spy)
        if self.kind is AttackKind.DELAY:
            return DelayPhotonAttack(self.delay)
        if self.kind is AttackKind.MEASURE_RESEND:
            return MeasureResendAttack(self.direction)
        return NoAttack()
