import math
from unittest.mock import MagicMock

import pytest

from qsdc.errors import (
    AttackModelViolation,
    ConfigurationError,
    HarnessError,
    RegistryCorruptionError,
)
from qsdc.optics.channel import (
    ChannelAccess,
    DeviceConfig,
    Direction,
    MeasureBasis,
    Owner,
    PairRef,
    PairRegistry,
    Photon,
    PhotonPulse,
    RegistryBook,
    device_apply,
    fidelity,
    filter_pulse,
    pns_check,
    tap_and_inject,
)
from qsdc.quantum.bell import BellLabel, EncodeOp, Pure, ZCollapsed


def _pulse_with(registry, *photon_specs, slot=0):
    photons = []
    for wavelength, delay, owner in photon_specs:
        ref = registry.create(Pure(BellLabel.PSI_MINUS))
        photons.append(Photon(wavelength, delay, ref, owner))
    return PhotonPulse(slot, tuple(photons))


def test_fidelity_values():
    assert fidelity(0.0, 1.0) == 1.0
    assert fidelity(0.1, 1.0) == pytest.approx(math.exp(-0.01))
    assert fidelity(1.0, 1.0) == pytest.approx(math.exp(-1))
    assert fidelity(0.3, 1.0) > fidelity(1.0, 1.0)


@pytest.mark.parametrize(
    "field,value",
    [
        ("lambda_legit", 0.0),
        ("time_window", -1.0),
        ("fidelity_sigma", 0.0),
        ("filter_passband", 0.0),
        ("pns_sample_fraction", 1.5),
    ],
)
def test_device_config_rejects_bad_values(field, value):
    with pytest.raises(ConfigurationError) as exc_info:
        DeviceConfig(**{field: value})
    assert exc_info.value.key == field


def test_photon_rejects_negative_delay():
    with pytest.raises(HarnessError):
        Photon(1550.0, -0.1, PairRef("alice", 0))


def test_device_apply_on_resonant_photon_never_draws(device):
    """Resonant photons always receive the op and consume no randomness."""
    registry = PairRegistry("alice")
    book = RegistryBook(registry)
    pulse = _pulse_with(registry, (1550.0, 0.0, Owner.LEGITIMATE))
    rng = MagicMock()

    assert device_apply(pulse.photons[0], book, EncodeOp.U2, device, rng) is True
    assert registry.get(pulse.photons[0].pair_ref) == Pure(BellLabel.PHI_MINUS)
    rng.random.assert_not_called()


def test_device_apply_detuned_photon_follows_fidelity(device, rng):
    """A detuned photon is hit with probability exp(-(d/sigma)^2)."""
    registry = PairRegistry("eve")
    book = RegistryBook(registry)
    hits = 0
    trials = 4000
    for _ in range(trials):
        pulse = _pulse_with(registry, (1551.0, 0.0, Owner.SPY))
        hits += device_apply(pulse.photons[0], book, EncodeOp.U1, device, rng)
    p = math.exp(-1)
    assert abs(hits / trials - p) < 3 * math.sqrt(p * (1 - p) / trials)


def test_device_apply_miss_leaves_pair_untouched(device):
    registry = PairRegistry("eve")
    book = RegistryBook(registry)
    pulse = _pulse_with(registry, (1551.0, 0.0, Owner.SPY))
    rng = MagicMock()
    rng.random.return_value = 0.99

    assert device_apply(pulse.photons[0], book, EncodeOp.U3, device, rng) is False
    assert registry.get(pulse.photons[0].pair_ref) == Pure(BellLabel.PSI_MINUS)


def test_device_apply_outside_window_is_harness_error(device, rng):
    registry = PairRegistry("eve")
    pulse = _pulse_with(registry, (1550.0, 1.5, Owner.SPY))
    with pytest.raises(HarnessError):
        device_apply(pulse.photons[0], RegistryBook(registry), EncodeOp.U1, device, rng)


def test_filter_pulse_drops_out_of_band_photons(device):
    registry = PairRegistry("alice")
    pulse = _pulse_with(
        registry,
        (1550.0, 0.0, Owner.LEGITIMATE),
        (1550.4, 0.0, Owner.SPY),
        (1551.0, 0.0, Owner.SPY),
    )
    filtered = filter_pulse(pulse, device)
    assert [p.wavelength for p in filtered.photons] == [1550.0, 1550.4]
    assert filter_pulse(filtered, device) is filtered


def test_pns_check_single_photon_never_flagged(device, rng):
    registry = PairRegistry("alice")
    for _ in range(200):
        outcome = pns_check(_pulse_with(registry, (1550.0, 0.0, Owner.LEGITIMATE)), device, rng)
        assert outcome.multiphoton is False
        assert outcome.visible_photons == 1
        assert all(isinstance(b, MeasureBasis) for b in outcome.bases)


def test_pns_check_two_photons_flagged_half_the_time(device, rng):
    registry = PairRegistry("alice")
    trials = 4000
    flagged = sum(
        pns_check(
            _pulse_with(registry, (1550.0, 0.0, Owner.LEGITIMATE), (1550.0, 0.5, Owner.SPY)),
            device,
            rng,
        ).multiphoton
        for _ in range(trials)
    )
    assert abs(flagged / trials - 0.5) < 3 * math.sqrt(0.25 / trials)


def test_pns_check_ignores_photons_outside_window(device, rng):
    registry = PairRegistry("alice")
    pulse = _pulse_with(registry, (1550.0, 0.0, Owner.LEGITIMATE), (1550.0, 2.0, Owner.SPY))
    outcomes = [pns_check(pulse, device, rng) for _ in range(100)]
    assert not any(o.multiphoton for o in outcomes)
    assert all(o.visible_photons == 1 for o in outcomes)


def test_registry_rejects_unknown_reference():
    registry = PairRegistry("alice")
    with pytest.raises(RegistryCorruptionError):
        registry.get(PairRef("alice", 3))
    with pytest.raises(RegistryCorruptionError):
        RegistryBook(registry).get(PairRef("bob", 0))


def test_registry_book_rejects_duplicate_namespace():
    with pytest.raises(HarnessError):
        RegistryBook(PairRegistry("alice"), PairRegistry("alice"))


def test_tap_without_hook_is_identity(device):
    registry = PairRegistry("alice")
    pulses = [_pulse_with(registry, (1550.0, 0.0, Owner.LEGITIMATE), slot=i) for i in range(3)]
    channel = ChannelAccess(device, RegistryBook(registry))
    assert tap_and_inject(Direction.ALICE_TO_BOB, pulses, None, channel) == pulses


def test_tap_allows_spy_photons(device):
    registry = PairRegistry("alice")
    spy_registry = PairRegistry("eve")
    pulses = [_pulse_with(registry, (1550.0, 0.0, Owner.LEGITIMATE), slot=i) for i in range(2)]
    channel = ChannelAccess(device, RegistryBook(registry, spy_registry))

    def hook(direction, train, access):
        return [
            pulse.with_photons(
                pulse.photons + (Photon(1550.0, 0.5, spy_registry.create(Pure(BellLabel.PSI_MINUS)), Owner.SPY),)
            )
            for pulse in train
        ]

    tapped = tap_and_inject(Direction.ALICE_TO_BOB, pulses, hook, channel)
    assert [len(p.spies()) for p in tapped] == [1, 1]


@pytest.mark.parametrize("mutation", ["drop", "reorder", "replace"])
def test_tap_rejects_hooks_touching_legitimate_photons(device, mutation):
    registry = PairRegistry("alice")
    pulses = [_pulse_with(registry, (1550.0, 0.0, Owner.LEGITIMATE), slot=i) for i in range(3)]
    channel = ChannelAccess(device, RegistryBook(registry))

    def hook(direction, train, access):
        if mutation == "drop":
            return [train[0].with_photons(()), *train[1:]]
        if mutation == "reorder":
            return list(reversed(train))
        photon = train[0].photons[0]
        return [train[0].with_photons((Photon(1551.0, 0.0, photon.pair_ref),)), *train[1:]]

    with pytest.raises(AttackModelViolation):
        tap_and_inject(Direction.BOB_TO_ALICE, pulses, hook, channel)


def test_channel_z_measure_collapses_pair(device, rng):
    registry = PairRegistry("alice")
    pulse = _pulse_with(registry, (1550.0, 0.0, Owner.LEGITIMATE))
    channel = ChannelAccess(device, RegistryBook(registry))

    bit = channel.z_measure(pulse.photons[0], rng)
    assert registry.get(pulse.photons[0].pair_ref) == ZCollapsed(1 - bit, bit)
