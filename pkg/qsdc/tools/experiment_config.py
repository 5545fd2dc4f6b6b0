"""
Experiment files.

An experiment file is a flat ``key = value`` list in dotenv syntax, one entry
per line, ``#`` starting a comment. Every key is optional; see ``CONFIG_KEYS``
for the defaults. Precedence, lowest first: defaults, file, ``--set``
overrides, ``--seed`` / ``--threads`` flags. ``QSDC_SEED`` and ``QSDC_THREADS``
only apply when neither the file nor the flags set the value.
"""

import io
import logging
import os
import re
from typing import Any, Callable, Dict, Iterable, Mapping, NamedTuple, Optional, Tuple

from dotenv import dotenv_values
from dotenv.parser import parse_stream

from config import config
from qsdc.adversary.attacks import AttackKind, AttackSpec
from qsdc.errors import ConfigurationError
from qsdc.experiment.trials import ExperimentSpec, Sweep, with_value
from qsdc.optics.channel import DeviceConfig, Direction
from qsdc.protocol.engine import ProtocolConfig, Variant
from qsdc.quantum.bell import BitMapping
from qsdc.tools.report import write_atomic

logger = logging.getLogger(__name__)


class ConfigKey(NamedTuple):
    default: str
    parse: Callable[[str], Any]
    description: str


def _enum(enum_cls):
    def parse(text: str):
        return enum_cls(text.strip().lower())

    return parse


def _number(text: str):
    text = text.strip()
    return int(text) if re.fullmatch(r"[+-]?\d+", text) else float(text)


def _values(text: str) -> Tuple[Any, ...]:
    return tuple(_number(v) for v in text.split(",") if v.strip())


def _seed(text: str) -> int:
    return int(text.strip(), 0)


CONFIG_KEYS: Dict[str, ConfigKey] = {
    "variant": ConfigKey("original", _enum(Variant), "protocol variant: original|improved"),
    "attack": ConfigKey("none", _enum(AttackKind), "attack: none|ipe|delay|measure-resend"),
    "n_pairs": ConfigKey("64", int, "EPR pairs per run (N)"),
    "check_fraction": ConfigKey("0.5", float, "share of usable slots in the C set"),
    "error_threshold": ConfigKey("0.0", float, "tolerated C-set error rate"),
    "multiphoton_threshold": ConfigKey("0.0", float, "tolerated multiphoton rate"),
    "pns_sample_fraction": ConfigKey("0.25", float, "probability a pulse is spent on the splitter check"),
    "lambda_legit_nm": ConfigKey("1550.0", float, "legitimate wavelength, nm"),
    "time_window_ns": ConfigKey("1.0", float, "device time window, ns"),
    "fidelity_sigma_nm": ConfigKey("1.0", float, "device fidelity width, nm"),
    "filter_passband_nm": ConfigKey("0.5", float, "filter half-width, nm"),
    "ipe_detuning": ConfigKey("0.1", float, "spy wavelength offset in fidelity widths"),
    "delay_ns": ConfigKey("0.5", float, "delay of the Trojan photon, ns"),
    "measure_direction": ConfigKey("bob-to-alice", _enum(Direction), "line measure-resend sits on"),
    "bit_mapping": ConfigKey(BitMapping.DEFAULT_TEXT, BitMapping.parse, "operation to bit pair mapping"),
    "n_trials": ConfigKey("10000", int, "trials per experiment"),
    "seed": ConfigKey("0", _seed, "base seed, unsigned 64-bit"),
    "threads": ConfigKey("1", int, "worker processes"),
    "sweep.key": ConfigKey("", str, "configuration key to sweep"),
    "sweep.values": ConfigKey("", _values, "comma separated sweep values"),
}


def _read_file(path: str) -> Dict[str, str]:
    if not os.path.isfile(path):
        raise ConfigurationError(f"config file not found: {path}", key="config")

    with open(path, encoding="utf-8") as f:
        text = f.read()
    for binding in parse_stream(io.StringIO(text)):
        if binding.error:
            raise ConfigurationError(
                f"parse error in {path} at line {binding.original.line}: "
                f"{binding.original.string.strip()!r}",
                key="config",
            )
        if binding.key is not None and binding.value is None:
            raise ConfigurationError(
                f"parse error in {path} at line {binding.original.line}: {binding.key} has no value",
                key=binding.key,
            )

    values = dotenv_values(stream=io.StringIO(text), interpolate=False)
    return {key.strip(): (value or "") for key, value in values.items()}


def _check_keys(entries: Iterable[str], source: str) -> None:
    for key in entries:
        if key not in CONFIG_KEYS:
            raise ConfigurationError(f"unknown key {key!r} in {source}", key=key)


def _env_fallback(name: str) -> Optional[str]:
    value = config.get(name)
    return None if value is None else str(value)


def _parse_values(raw: Mapping[str, str]) -> Dict[str, Any]:
    parsed = {}
    for key, text in raw.items():
        try:
            parsed[key] = CONFIG_KEYS[key].parse(text)
        except ConfigurationError as e:
            raise ConfigurationError(f"bad value for {key}: {e}", key=key) from None
        except (TypeError, ValueError):
            raise ConfigurationError(f"bad value for {key}: {text!r}", key=key) from None
    return parsed


def build_spec(values: Mapping[str, Any]) -> ExperimentSpec:
    """ExperimentSpec from fully parsed values."""
    device = DeviceConfig(
        lambda_legit=values["lambda_legit_nm"],
        time_window=values["time_window_ns"],
        fidelity_sigma=values["fidelity_sigma_nm"],
        filter_passband=values["filter_passband_nm"],
        pns_sample_fraction=values["pns_sample_fraction"],
    )
    protocol = ProtocolConfig(
        n_pairs=values["n_pairs"],
        check_fraction=values["check_fraction"],
        error_threshold=values["error_threshold"],
        variant=values["variant"],
        device=device,
        seed=values["seed"],
        multiphoton_threshold=values["multiphoton_threshold"],
        bit_mapping=values["bit_mapping"],
    )
    attack = AttackSpec(
        kind=values["attack"],
        ipe_detuning=values["ipe_detuning"],
        delay=values["delay_ns"],
        direction=values["measure_direction"],
        device=device,
    )
    sweep = None
    if values["sweep.key"] or values["sweep.values"]:
        if not values["sweep.key"]:
            raise ConfigurationError("sweep.values given without sweep.key", key="sweep.key")
        sweep = Sweep(values["sweep.key"], values["sweep.values"])

    spec = ExperimentSpec(
        protocol=protocol,
        attack=attack,
        n_trials=values["n_trials"],
        base_seed=values["seed"],
        sweep=sweep,
        threads=values["threads"],
    )
    if sweep is not None:
        for value in sweep.values:
            with_value(spec, sweep.key, value)
    return spec


def load_config(
    path: Optional[str] = None,
    overrides: Iterable[Tuple[str, str]] = (),
    seed: Optional[int] = None,
    threads: Optional[int] = None,
) -> ExperimentSpec:
    """
    Build an ExperimentSpec from an experiment file and command line overrides.

    Args:
        path: Experiment file, or None for defaults only
        overrides: ``(key, value)`` pairs from ``--set``, applied in order
        seed: ``--seed`` flag value
        threads: ``--threads`` flag value

    Raises:
        ConfigurationError: missing file, parse error, unknown key, bad value or
            invariant violation; ``key`` names the offending entry
    """
    raw = {key: entry.default for key, entry in CONFIG_KEYS.items()}
    explicit = set()

    if path:
        from_file = _read_file(path)
        _check_keys(from_file, path)
        raw.update(from_file)
        explicit.update(from_file)

    overrides = list(overrides)
    _check_keys((key for key, _ in overrides), "--set")
    for key, value in overrides:
        raw[key] = value
        explicit.add(key)

    for key, flag, env_name in (("seed", seed, "SEED"), ("threads", threads, "THREADS")):
        if flag is not None:
            raw[key] = str(flag)
        elif key not in explicit:
            fallback = _env_fallback(env_name)
            if fallback is not None:
                logger.debug(f"{key} taken from QSDC_{env_name}")
                raw[key] = fallback

    values = _parse_values(raw)
    try:
        spec = build_spec(values)
    except ConfigurationError as e:
        raise ConfigurationError(f"invariant violation: {e}", key=e.key) from None
    logger.debug(f"loaded experiment: {spec}")
    return spec


def render_config(spec: ExperimentSpec) -> str:
    """The effective configuration of ``spec`` in experiment file syntax."""
    protocol, device, attack = spec.protocol, spec.protocol.device, spec.attack
    entries = {
        "variant": protocol.variant.value,
        "attack": attack.kind.value,
        "n_pairs": protocol.n_pairs,
        "check_fraction": repr(protocol.check_fraction),
        "error_threshold": repr(protocol.error_threshold),
        "multiphoton_threshold": repr(protocol.multiphoton_threshold),
        "pns_sample_fraction": repr(device.pns_sample_fraction),
        "lambda_legit_nm": repr(device.lambda_legit),
        "time_window_ns": repr(device.time_window),
        "fidelity_sigma_nm": repr(device.fidelity_sigma),
        "filter_passband_nm": repr(device.filter_passband),
        "ipe_detuning": repr(attack.ipe_detuning),
        "delay_ns": repr(attack.delay),
        "measure_direction": attack.direction.value,
        "bit_mapping": protocol.bit_mapping.to_text(),
        "n_trials": spec.n_trials,
        "seed": spec.base_seed,
        "threads": spec.threads,
    }
    if spec.sweep is not None:
        entries["sweep.key"] = spec.sweep.key
        entries["sweep.values"] = ",".join(repr(v) for v in spec.sweep.values)
    lines = ["# effective qsdc experiment configuration"]
    lines.extend(f"{key}={value}" for key, value in entries.items())
    return "\n".join(lines) + "\n"


def emit_config(spec: ExperimentSpec, path: str) -> None:
    write_atomic(path, render_config(spec))
    logger.info(f"effective configuration written to {path}")
