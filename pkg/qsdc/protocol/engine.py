"""
Alice and Bob running the order-secrecy direct communication protocol.

Two variants share one engine:

* ``original``: one security check, on the Bob -> Alice line only.
* ``improved``: Bob also filters what he receives and spends a random sample of
  pulses on a photon-number-splitter check before encoding anything.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import (
    Callable,
    Dict,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np

from qsdc.errors import ConfigurationError, HarnessError
from qsdc.optics.channel import (
    ChannelAccess,
    DeviceConfig,
    Direction,
    PairRef,
    PairRegistry,
    Photon,
    PhotonPulse,
    PnsOutcome,
    RegistryBook,
    device_apply,
    filter_pulse,
    iter_visible,
    pns_check,
    tap_and_inject,
)
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

MAX_SEED = 2**64 - 1

Message = Union[Sequence[int], Callable[[int], Sequence[int]]]


class Variant(Enum):
    ORIGINAL = "original"
    IMPROVED = "improved"


class RunStatus(Enum):
    COMPLETED = "completed"
    ABORTED_AT_PNS_CHECK = "aborted-at-pns-check"
    ABORTED_AT_BELL_CHECK = "aborted-at-bell-check"

    @property
    def aborted(self) -> bool:
        return self is not RunStatus.COMPLETED


def check_set_size(n: int, check_fraction: float) -> int:
    """|C| for ``n`` usable slots, rounded half-up."""
    return int(math.floor(n * check_fraction + 0.5))


def minimum_partition_size(check_fraction: float) -> int:
    """Smallest slot count whose C/M split leaves both sets non-empty."""
    n = 2
    while not 1 <= check_set_size(n, check_fraction) <= n - 1:
        n += 1
    return n


@dataclass(frozen=True)
class ProtocolConfig:
    n_pairs: int = 64
    check_fraction: float = 0.5
    error_threshold: float = 0.0
    variant: Variant = Variant.ORIGINAL
    device: DeviceConfig = field(default_factory=DeviceConfig)
    seed: int = 0
    multiphoton_threshold: float = 0.0
    bit_mapping: BitMapping = field(default_factory=BitMapping.default)

    def __post_init__(self):
        if not 0.0 < self.check_fraction < 1.0:
            raise ConfigurationError(
                f"check_fraction must be strictly between 0 and 1, got {self.check_fraction}",
                key="check_fraction",
            )
        if not 0.0 <= self.error_threshold < 1.0:
            raise ConfigurationError(
                f"error_threshold must be in [0, 1), got {self.error_threshold}",
                key="error_threshold",
            )
        if not 0.0 <= self.multiphoton_threshold < 1.0:
            raise ConfigurationError(
                f"multiphoton_threshold must be in [0, 1), got {self.multiphoton_threshold}",
                key="multiphoton_threshold",
            )
        if not 0 <= self.seed <= MAX_SEED:
            raise ConfigurationError(
                f"seed must be an unsigned 64-bit integer, got {self.seed}", key="seed"
            )
        if self.n_pairs < 2:
            raise ConfigurationError(
                f"n_pairs must be at least 2, got {self.n_pairs}", key="n_pairs"
            )
        minimum = minimum_partition_size(self.check_fraction)
        if self.n_pairs < minimum:
            raise ConfigurationError(
                f"n_pairs={self.n_pairs} cannot be split into non-empty C and M sets "
                f"at check_fraction={self.check_fraction} (need at least {minimum})",
                key="n_pairs",
            )


class RunStreams:
    """
    Independent random streams of one run, all spawned from the run seed.

    Parties never share a stream, so an adversary drawing randomness cannot shift
    what Alice or Bob draw.
    """

    NAMES = ("protocol", "alice", "device", "pns", "message", "adversary")

    def __init__(self, seed: int):
        self.seed = seed
        children = np.random.SeedSequence(seed).spawn(len(self.NAMES))
        for name, child in zip(self.NAMES, children):
            setattr(self, name, np.random.default_rng(child))


@dataclass(frozen=True)
class SecretOrder:
    """``slots[position]`` is the slot Bob sends at that position."""

    slots: Tuple[int, ...]

    def __post_init__(self):
        if len(set(self.slots)) != len(self.slots):
            raise HarnessError("secret order is not a permutation")

    @classmethod
    def random(cls, slots: Sequence[int], rng: np.random.Generator) -> "SecretOrder":
        return cls(tuple(int(s) for s in rng.permutation(np.asarray(slots, dtype=int))))

    def position_of(self) -> Dict[int, int]:
        return {slot: position for position, slot in enumerate(self.slots)}

    def apply(self, pulses_by_slot: Mapping[int, PhotonPulse]) -> List[PhotonPulse]:
        """Return the pulses in transmission order, re-labelled by position."""
        return [
            PhotonPulse(position, pulses_by_slot[slot].photons)
            for position, slot in enumerate(self.slots)
        ]


class AnnouncementKind(Enum):
    RECEIPT_CONFIRMED = "receipt-confirmed"
    SAMPLE_DISCLOSURE = "sample-disclosure"
    SAMPLE_RESULTS = "sample-results"
    C_SET_DISCLOSURE = "c-set-disclosure"
    C_SET_RESULTS = "c-set-results"
    M_SET_ORDER = "m-set-order"
    ABORT = "abort"


@dataclass(frozen=True)
class Announcement:
    kind: AnnouncementKind
    sender: str
    order: Tuple[Tuple[int, int], ...] = ()  # (slot, transmitted position)
    outcomes: Tuple[Tuple[int, BellLabel], ...] = ()
    samples: Tuple[PnsOutcome, ...] = ()
    note: str = ""


class Transcript:
    """Public classical channel. Every party, Eve included, may read it."""

    def __init__(self):
        self._announcements: List[Announcement] = []

    def append(self, announcement: Announcement) -> None:
        logger.debug(f"{announcement.sender} announces {announcement.kind.value}")
        self._announcements.append(announcement)

    def latest(self, kind: AnnouncementKind) -> Optional[Announcement]:
        for announcement in reversed(self._announcements):
            if announcement.kind is kind:
                return announcement
        return None

    @property
    def announcements(self) -> Tuple[Announcement, ...]:
        return tuple(self._announcements)

    def __iter__(self):
        return iter(self._announcements)

    def __len__(self):
        return len(self._announcements)

    def __eq__(self, other):
        return isinstance(other, Transcript) and self.announcements == other.announcements


@dataclass(frozen=True)
class RunResult:
    status: RunStatus
    c_set_error_rate: Optional[float]
    multiphoton_rate: Optional[float]
    alice_bits: Tuple[int, ...]
    bob_message: Tuple[int, ...]
    transcript: Transcript
    check_size: int = 0
    sampled_count: int = 0

    def __post_init__(self):
        if self.status is RunStatus.COMPLETED and len(self.alice_bits) != len(self.bob_message):
            raise HarnessError(
                f"completed run decoded {len(self.alice_bits)} bits for a "
                f"{len(self.bob_message)}-bit message"
            )


def prepare_pairs(
    cfg: ProtocolConfig, rng: Optional[np.random.Generator] = None
) -> Tuple[PairRegistry, List[PairRef], List[PhotonPulse]]:
    """
    Alice's EPR source: N pairs in the singlet, one travel photon per pulse.

    Returns:
        (Alice's registry, home sequence as pair references, travel pulses)
    """
    registry = PairRegistry("alice")
    home_seq = [registry.create(Pure(INITIAL_STATE)) for _ in range(cfg.n_pairs)]
    pulses = [
        PhotonPulse(slot, (Photon(cfg.device.lambda_legit, 0.0, ref),))
        for slot, ref in enumerate(home_seq)
    ]
    return registry, home_seq, pulses


def partition_sets(
    n: int, check_fraction: float, rng: np.random.Generator
) -> Tuple[List[int], List[int]]:
    """
    Split ``range(n)`` into a uniformly random C set of size round(n * fraction)
    and the M set of the rest. Both lists come back sorted.
    """
    size = check_set_size(n, check_fraction)
    if size < 1 or size > n - 1:
        raise ConfigurationError(
            f"{n} slot(s) at check_fraction={check_fraction} give |C|={size}, "
            f"|M|={n - size}; both must be non-empty",
            key="check_fraction",
        )
    chosen = rng.choice(n, size=size, replace=False)
    c_indices = sorted(int(i) for i in chosen)
    c_lookup = set(c_indices)
    m_indices = [i for i in range(n) if i not in c_lookup]
    return c_indices, m_indices


def encode_sequence(
    pair_registry: RegistryBook,
    travel_pulses: Sequence[PhotonPulse],
    assignments: Mapping[int, EncodeOp],
    device: DeviceConfig,
    rng: np.random.Generator,
) -> None:
    """Run every photon inside the time window through the slot's device."""
    for pulse in travel_pulses:
        op = assignments.get(pulse.slot_index)
        if op is None:
            raise HarnessError(f"slot {pulse.slot_index} has no encoding assigned")
        for photon in iter_visible(pulse, device):
            device_apply(photon, pair_registry, op, device, rng)


def check_security(
    bob_check_ops: Mapping[int, EncodeOp],
    alice_outcomes: Mapping[int, BellLabel],
    initial: BellLabel,
    epsilon: float,
) -> Tuple[float, bool]:
    """
    Compare Bob's check operations with what Alice's Bell measurements imply.

    Returns:
        (error rate over the C set, whether it is within ``epsilon``)
    """
    if set(bob_check_ops) != set(alice_outcomes):
        raise HarnessError(
            f"C set mismatch: Bob checked {len(bob_check_ops)} slot(s), "
            f"Alice reported {len(alice_outcomes)}"
        )
    if not bob_check_ops:
        raise HarnessError("C set is empty")
    errors = sum(
        1
        for slot, op in bob_check_ops.items()
        if decode_op(initial, alice_outcomes[slot]) is not op
    )
    error_rate = errors / len(bob_check_ops)
    return error_rate, error_rate <= epsilon


def alice_decode(
    home_seq: Sequence[PairRef],
    received: Mapping[int, PhotonPulse],
    transcript: Transcript,
    registry: PairRegistry,
    bit_mapping: BitMapping,
    rng: np.random.Generator,
    initial: BellLabel = INITIAL_STATE,
) -> List[int]:
    """
    Read the message using only Alice's own photons and the public transcript.

    ``received`` maps transmitted position to the pulse that arrived there.
    """
    disclosure = transcript.latest(AnnouncementKind.M_SET_ORDER)
    if disclosure is None:
        raise HarnessError("M set order has not been disclosed")
    outcomes = _measure_disclosed(disclosure.order, home_seq, received, registry, rng)
    ops = [decode_op(initial, outcomes[slot]) for slot, _ in disclosure.order]
    return bit_mapping.decode(ops)


def _measure_disclosed(
    order: Sequence[Tuple[int, int]],
    home_seq: Sequence[PairRef],
    received: Mapping[int, PhotonPulse],
    registry: PairRegistry,
    rng: np.random.Generator,
) -> Dict[int, BellLabel]:
    outcomes = {}
    for slot, position in order:
        pulse = received.get(position)
        travel = pulse.legitimate() if pulse is not None else ()
        if len(travel) != 1 or travel[0].pair_ref != home_seq[slot]:
            raise HarnessError(
                f"no travel photon partnering home photon {slot} at position {position}"
            )
        outcomes[slot] = bell_measure(registry.get(home_seq[slot]), rng)
    return outcomes


class Alice:
    """Sender of the EPR pairs and reader of the message."""

    name = "alice"

    def __init__(self, cfg: ProtocolConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.registry: Optional[PairRegistry] = None
        self.home_seq: List[PairRef] = []
        self.received: Dict[int, PhotonPulse] = {}

    def prepare(self) -> List[PhotonPulse]:
        self.registry, self.home_seq, pulses = prepare_pairs(self.cfg, self.rng)
        return pulses

    def receive(self, pulses: Sequence[PhotonPulse], transcript: Transcript) -> None:
        self.received = {pulse.slot_index: pulse for pulse in pulses}
        transcript.append(Announcement(AnnouncementKind.RECEIPT_CONFIRMED, self.name))

    def publish_check_results(self, transcript: Transcript) -> Dict[int, BellLabel]:
        disclosure = transcript.latest(AnnouncementKind.C_SET_DISCLOSURE)
        if disclosure is None:
            raise HarnessError("C set has not been disclosed")
        outcomes = _measure_disclosed(
            disclosure.order, self.home_seq, self.received, self.registry, self.rng
        )
        transcript.append(
            Announcement(
                AnnouncementKind.C_SET_RESULTS,
                self.name,
                outcomes=tuple(sorted(outcomes.items())),
            )
        )
        return outcomes

    def decode(self, transcript: Transcript) -> List[int]:
        return alice_decode(
            self.home_seq,
            self.received,
            transcript,
            self.registry,
            self.cfg.bit_mapping,
            self.rng,
        )


class Bob:
    """Receiver of the travel photons and sender of the secret message."""

    name = "bob"

    def __init__(self, cfg: ProtocolConfig, streams: RunStreams):
        self.cfg = cfg
        self.rng = streams.protocol
        self.device_rng = streams.device
        self.pns_rng = streams.pns
        self.pulses: Dict[int, PhotonPulse] = {}
        self.check_ops: Dict[int, EncodeOp] = {}
        self.message_ops: Dict[int, EncodeOp] = {}
        self.order: Optional[SecretOrder] = None

    def receive(self, pulses: Sequence[PhotonPulse]) -> None:
        if self.cfg.variant is Variant.IMPROVED:
            pulses = [filter_pulse(pulse, self.cfg.device) for pulse in pulses]
        self.pulses = {pulse.slot_index: pulse for pulse in pulses}

    def sample_multiphoton(self, transcript: Transcript) -> Tuple[float, int, bool]:
        """
        Spend a Bernoulli sample of pulses on the splitter check.

        Returns:
            (multiphoton rate, number of sampled pulses, whether the check passed)
        """
        slots = sorted(self.pulses)
        draws = self.pns_rng.random(len(slots))
        sampled = [slot for slot, draw in zip(slots, draws) if draw < self.cfg.device.pns_sample_fraction]

        minimum = minimum_partition_size(self.cfg.check_fraction)
        excess = len(sampled) - (len(slots) - minimum)
        if excess > 0:
            logger.warning(
                f"PNS sample of {len(sampled)} would leave fewer than {minimum} slots; "
                f"returning {excess} to the pool"
            )
            sampled = sampled[:-excess]

        results = tuple(
            pns_check(self.pulses.pop(slot), self.cfg.device, self.pns_rng) for slot in sampled
        )
        flagged = sum(1 for result in results if result.multiphoton)
        rate = flagged / len(results) if results else 0.0

        transcript.append(
            Announcement(
                AnnouncementKind.SAMPLE_DISCLOSURE,
                self.name,
                order=tuple((slot, slot) for slot in sampled),
            )
        )
        transcript.append(
            Announcement(AnnouncementKind.SAMPLE_RESULTS, self.name, samples=results)
        )
        passed = rate <= self.cfg.multiphoton_threshold
        logger.debug(
            f"PNS check: {flagged}/{len(results)} multiphoton, rate={rate:.4f}, passed={passed}"
        )
        return rate, len(results), passed

    def choose_sets(self) -> Tuple[List[int], List[int]]:
        slots = sorted(self.pulses)
        c_idx, m_idx = partition_sets(len(slots), self.cfg.check_fraction, self.rng)
        return [slots[i] for i in c_idx], [slots[i] for i in m_idx]

    def encode(
        self,
        book: RegistryBook,
        c_slots: Sequence[int],
        m_slots: Sequence[int],
        message_bits: Sequence[int],
    ) -> None:
        draws = self.rng.integers(4, size=len(c_slots))
        ops = list(EncodeOp)
        self.check_ops = {slot: ops[int(d)] for slot, d in zip(c_slots, draws)}
        self.message_ops = dict(zip(m_slots, self.cfg.bit_mapping.encode(message_bits)))
        assignments = {**self.check_ops, **self.message_ops}
        encode_sequence(
            book,
            [self.pulses[slot] for slot in sorted(self.pulses)],
            assignments,
            self.cfg.device,
            self.device_rng,
        )

    def send_back(self) -> List[PhotonPulse]:
        self.order = SecretOrder.random(sorted(self.pulses), self.rng)
        return self.order.apply(self.pulses)

    def _disclose(self, kind: AnnouncementKind, slots: Sequence[int]) -> Announcement:
        position_of = self.order.position_of()
        return Announcement(
            kind, self.name, order=tuple((slot, position_of[slot]) for slot in sorted(slots))
        )

    def disclose_check_set(self, transcript: Transcript) -> None:
        transcript.append(self._disclose(AnnouncementKind.C_SET_DISCLOSURE, list(self.check_ops)))

    def disclose_message_order(self, transcript: Transcript) -> None:
        transcript.append(self._disclose(AnnouncementKind.M_SET_ORDER, list(self.message_ops)))

    def abort(self, transcript: Transcript, reason: str) -> None:
        transcript.append(Announcement(AnnouncementKind.ABORT, self.name, note=reason))


def _resolve_message(message: Message, length: int) -> Tuple[int, ...]:
    bits = tuple(int(b) for b in (message(length) if callable(message) else message))
    if len(bits) != length:
        raise ConfigurationError(
            f"message has {len(bits)} bit(s) but the M set carries {length}",
            key="message",
        )
    if any(b not in (0, 1) for b in bits):
        raise ConfigurationError("message bits must be 0 or 1", key="message")
    return bits


def _run(cfg: ProtocolConfig, message: Message, attack, streams: Optional[RunStreams]) -> RunResult:
    streams = streams or RunStreams(cfg.seed)
    transcript = Transcript()

    alice = Alice(cfg, streams.alice)
    pulses = alice.prepare()
    book = RegistryBook(alice.registry)
    channel = ChannelAccess(cfg.device, book)
    hook = None
    if attack is not None:
        attack.attach(book, transcript, streams.adversary)
        hook = attack.intercept

    pulses = tap_and_inject(Direction.ALICE_TO_BOB, pulses, hook, channel)

    bob = Bob(cfg, streams)
    bob.receive(pulses)

    multiphoton_rate = None
    sampled_count = 0
    if cfg.variant is Variant.IMPROVED:
        multiphoton_rate, sampled_count, passed = bob.sample_multiphoton(transcript)
        if not passed:
            bob.abort(transcript, f"multiphoton rate {multiphoton_rate:.6g} too high")
            return RunResult(
                RunStatus.ABORTED_AT_PNS_CHECK,
                None,
                multiphoton_rate,
                (),
                (),
                transcript,
                sampled_count=sampled_count,
            )

    c_slots, m_slots = bob.choose_sets()
    bob_message = _resolve_message(message, 2 * len(m_slots))
    bob.encode(book, c_slots, m_slots, bob_message)

    returned = bob.send_back()
    returned = tap_and_inject(Direction.BOB_TO_ALICE, returned, hook, channel)
    alice.receive(returned, transcript)

    bob.disclose_check_set(transcript)
    outcomes = alice.publish_check_results(transcript)
    error_rate, passed = check_security(
        bob.check_ops, outcomes, INITIAL_STATE, cfg.error_threshold
    )
    logger.debug(f"Bell check: error rate {error_rate:.4f} over {len(c_slots)} slot(s)")
    if not passed:
        bob.abort(transcript, f"C set error rate {error_rate:.6g} above threshold")
        return RunResult(
            RunStatus.ABORTED_AT_BELL_CHECK,
            error_rate,
            multiphoton_rate,
            (),
            bob_message,
            transcript,
            check_size=len(c_slots),
            sampled_count=sampled_count,
        )

    bob.disclose_message_order(transcript)
    alice_bits = alice.decode(transcript)
    return RunResult(
        RunStatus.COMPLETED,
        error_rate,
        multiphoton_rate,
        tuple(alice_bits),
        bob_message,
        transcript,
        check_size=len(c_slots),
        sampled_count=sampled_count,
    )


def run_original(
    cfg: ProtocolConfig,
    message_bits: Message,
    attack=None,
    streams: Optional[RunStreams] = None,
) -> RunResult:
    """
    One execution of the single-check protocol.

    Args:
        cfg: Protocol configuration; ``cfg.seed`` seeds the run unless ``streams`` is given
        message_bits: Bob's message, or a callable returning one of the requested length
        attack: Optional adversary strategy installed on both channel directions
        streams: Pre-built random streams (the experiment harness passes its own)
    """
    if cfg.variant is not Variant.ORIGINAL:
        raise ConfigurationError("run_original needs variant=original", key="variant")
    return _run(cfg, message_bits, attack, streams)


def run_improved(
    cfg: ProtocolConfig,
    message_bits: Message,
    attack=None,
    streams: Optional[RunStreams] = None,
) -> RunResult:
    """One execution of the filtered, double-check protocol. See ``run_original``."""
    if cfg.variant is not Variant.IMPROVED:
        raise ConfigurationError("run_improved needs variant=improved", key="variant")
    return _run(cfg, message_bits, attack, streams)


def run_protocol(
    cfg: ProtocolConfig,
    message_bits: Message,
    attack=None,
    streams: Optional[RunStreams] = None,
) -> RunResult:
    runner = run_improved if cfg.variant is Variant.IMPROVED else run_original
    return runner(cfg, message_bits, attack, streams)
