"""
Physical layer: photons, pulses, Bob's wavelength-dependent devices, the input
filter, the photon-number-splitter check and the channel taps.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import (
    Callable,
    Dict,
    Iterator,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
)

import numpy as np

from qsdc.errors import (
    AttackModelViolation,
    ConfigurationError,
    HarnessError,
    RegistryCorruptionError,
)
from qsdc.quantum.bell import EncodeOp, PairState, Side, apply_op, z_measure_travel

logger = logging.getLogger(__name__)


class Owner(Enum):
    LEGITIMATE = "legitimate"
    SPY = "spy"


class Direction(Enum):
    ALICE_TO_BOB = "alice-to-bob"
    BOB_TO_ALICE = "bob-to-alice"


class PairRef(NamedTuple):
    namespace: str
    index: int


class PairRegistry:
    """
    Store of pair states owned by one party.

    Args:
        namespace: Name of the owning party, part of every reference it hands out
    """

    def __init__(self, namespace: str):
        self.namespace = namespace
        self._states: Dict[int, PairState] = {}

    def create(self, state: PairState) -> PairRef:
        ref = PairRef(self.namespace, len(self._states))
        self._states[ref.index] = state
        return ref

    def get(self, ref: PairRef) -> PairState:
        try:
            return self._states[ref.index]
        except KeyError:
            raise RegistryCorruptionError(f"unknown pair reference {ref}") from None

    def set(self, ref: PairRef, state: PairState) -> None:
        if ref.index not in self._states:
            raise RegistryCorruptionError(f"unknown pair reference {ref}")
        self._states[ref.index] = state

    def __len__(self):
        return len(self._states)


class RegistryBook:
    """All registries of one run, so a device can resolve any photon it receives."""

    def __init__(self, *registries: PairRegistry):
        self._registries: Dict[str, PairRegistry] = {}
        for registry in registries:
            self.add(registry)

    def add(self, registry: PairRegistry) -> None:
        if registry.namespace in self._registries:
            raise HarnessError(f"registry namespace {registry.namespace!r} already in use")
        self._registries[registry.namespace] = registry

    def _registry(self, ref: PairRef) -> PairRegistry:
        registry = self._registries.get(ref.namespace)
        if registry is None:
            raise RegistryCorruptionError(f"no registry for pair reference {ref}")
        return registry

    def get(self, ref: PairRef) -> PairState:
        return self._registry(ref).get(ref)

    def set(self, ref: PairRef, state: PairState) -> None:
        self._registry(ref).set(ref, state)


@dataclass(frozen=True)
class Photon:
    wavelength: float  # nm
    delay: float  # ns after the start of the pulse
    pair_ref: PairRef
    owner: Owner = Owner.LEGITIMATE

    def __post_init__(self):
        if self.wavelength <= 0:
            raise HarnessError(f"photon wavelength must be positive, got {self.wavelength}")
        if self.delay < 0:
            raise HarnessError(f"photon delay must be non-negative, got {self.delay}")


@dataclass(frozen=True)
class PhotonPulse:
    slot_index: int
    photons: Tuple[Photon, ...] = ()

    def legitimate(self) -> Tuple[Photon, ...]:
        return tuple(p for p in self.photons if p.owner is Owner.LEGITIMATE)

    def spies(self) -> Tuple[Photon, ...]:
        return tuple(p for p in self.photons if p.owner is Owner.SPY)

    def with_photons(self, photons: Sequence[Photon]) -> "PhotonPulse":
        return replace(self, photons=tuple(photons))


@dataclass(frozen=True)
class DeviceConfig:
    lambda_legit: float = 1550.0  # nm
    time_window: float = 1.0  # ns
    fidelity_sigma: float = 1.0  # nm
    filter_passband: float = 0.5  # nm, half-width
    pns_sample_fraction: float = 0.25

    def __post_init__(self):
        for key in ("lambda_legit", "time_window", "fidelity_sigma", "filter_passband"):
            if not getattr(self, key) > 0:
                raise ConfigurationError(
                    f"{key} must be positive, got {getattr(self, key)}", key=key
                )
        if not 0.0 <= self.pns_sample_fraction <= 1.0:
            raise ConfigurationError(
                f"pns_sample_fraction must be in [0, 1], got {self.pns_sample_fraction}",
                key="pns_sample_fraction",
            )

    def detuning(self, photon: Photon) -> float:
        return abs(photon.wavelength - self.lambda_legit)

    def in_window(self, photon: Photon) -> bool:
        return photon.delay < self.time_window


def fidelity(detuning: float, sigma: float) -> float:
    """Probability that a device tuned to the legitimate wavelength acts on a photon."""
    return math.exp(-((detuning / sigma) ** 2))


def device_apply(
    photon: Photon,
    pair_registry: RegistryBook,
    op: EncodeOp,
    cfg: DeviceConfig,
    rng: np.random.Generator,
) -> bool:
    """
    Let one of Bob's encoding devices act on a photon inside its time window.

    Returns:
        True if the operation landed on the photon's pair, False if the device
        missed it and the pair was left unchanged.
    """
    if not cfg.in_window(photon):
        raise HarnessError(
            f"photon with delay {photon.delay} ns is outside the {cfg.time_window} ns window"
        )
    state = pair_registry.get(photon.pair_ref)
    detuning = cfg.detuning(photon)
    if detuning > 0 and rng.random() >= fidelity(detuning, cfg.fidelity_sigma):
        return False
    pair_registry.set(photon.pair_ref, apply_op(state, op, Side.TRAVEL))
    return True


def filter_pulse(pulse: PhotonPulse, cfg: DeviceConfig) -> PhotonPulse:
    """Drop every photon further than the passband from the legitimate wavelength."""
    kept = [p for p in pulse.photons if cfg.detuning(p) <= cfg.filter_passband]
    if len(kept) == len(pulse.photons):
        return pulse
    return pulse.with_photons(kept)


class MeasureBasis(Enum):
    Z = "sigma_z"
    X = "sigma_x"


@dataclass(frozen=True)
class PnsOutcome:
    slot_index: int
    multiphoton: bool
    visible_photons: int
    bases: Tuple[MeasureBasis, MeasureBasis]


def pns_check(pulse: PhotonPulse, cfg: DeviceConfig, rng: np.random.Generator) -> PnsOutcome:
    """
    Split a sampled pulse on a 50/50 photon-number splitter and look for a
    coincidence between the two output detectors.

    Each photon inside the time window routes independently to either port; the
    pulse is flagged when both ports fire, which for k photons happens with
    probability 1 - 2**(1 - k). The detector bases are drawn and recorded but do
    not change the flag. The pulse is consumed.
    """
    bases = tuple(
        MeasureBasis.Z if rng.integers(2) == 0 else MeasureBasis.X for _ in range(2)
    )
    visible = sum(1 for p in pulse.photons if cfg.in_window(p))
    ports = rng.integers(2, size=visible) if visible else np.zeros(0, dtype=int)
    multiphoton = bool(visible > 1 and 0 < int(ports.sum()) < visible)
    return PnsOutcome(pulse.slot_index, multiphoton, visible, bases)


@dataclass
class ChannelAccess:
    """
    What an adversary sitting on the fibre can physically do.

    Measuring a passing photon collapses the pair it belongs to, so the channel
    performs that on the adversary's behalf; the registries themselves are not
    exposed.
    """

    device: DeviceConfig
    _book: RegistryBook = field(repr=False)

    def z_measure(self, photon: Photon, rng: np.random.Generator) -> int:
        bit, collapsed = z_measure_travel(self._book.get(photon.pair_ref), rng)
        self._book.set(photon.pair_ref, collapsed)
        return bit


AdversaryHook = Callable[[Direction, List[PhotonPulse], ChannelAccess], List[PhotonPulse]]


def _legitimate_layout(pulses: Sequence[PhotonPulse]) -> List[Tuple[int, Tuple[Photon, ...]]]:
    return [(pulse.slot_index, pulse.legitimate()) for pulse in pulses]


def tap_and_inject(
    direction: Direction,
    pulses: Sequence[PhotonPulse],
    adversary_hook: Optional[AdversaryHook],
    channel: ChannelAccess,
) -> List[PhotonPulse]:
    """
    Pass a pulse train through the point where an adversary may act on it.

    The hook may add or remove spy photons only; legitimate photons and the slot
    order must come out exactly as they went in.
    """
    pulses = list(pulses)
    if adversary_hook is None:
        return pulses

    before = _legitimate_layout(pulses)
    tapped = list(adversary_hook(direction, list(pulses), channel))
    after = _legitimate_layout(tapped)

    if before != after:
        lost = Counter(p.pair_ref for _, photons in before for p in photons)
        lost.subtract(p.pair_ref for _, photons in after for p in photons)
        changed = sorted(str(ref) for ref, count in lost.items() if count)
        raise AttackModelViolation(
            f"adversary hook on {direction.value} altered legitimate photons or slot "
            f"order (pairs affected: {changed or 'order only'})"
        )

    logger.debug(
        f"tap {direction.value}: {sum(len(p.spies()) for p in tapped)} spy photon(s) in flight"
    )
    return tapped


def iter_visible(pulse: PhotonPulse, cfg: DeviceConfig) -> Iterator[Photon]:
    """Photons of a pulse that fall inside the device time window."""
    return (p for p in pulse.photons if cfg.in_window(p))
