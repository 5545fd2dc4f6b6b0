import logging
from typing import List, Optional, Tuple

from qsdc.adversary.attacks import AttackKind
from qsdc.errors import ConfigurationError
from qsdc.experiment.analytic import StorageScheme, storage_cost
from qsdc.experiment.trials import (
    SWEEPABLE_KEYS,
    ExperimentSpec,
    compare_matrix,
    run_sweep,
    run_trials,
)
from qsdc.protocol.engine import Variant
from qsdc.tools.experiment_config import CONFIG_KEYS, emit_config, load_config
from qsdc.tools.help_system import command_meta, handle_help_command
from qsdc.tools.helpers import split_assignments
from qsdc.tools.report import FORMATS, emit_report, emit_storage_table, storage_row
from qsdc.tools.selftest import run_selftest

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SELFTEST_FAILED = 4

_EXPERIMENT_ARGUMENTS = {
    "config": {"description": "Experiment file (key=value lines)", "required": False, "type": "str"},
    "set": {
        "description": "Override one or more configuration keys, e.g. --set n_pairs=1000 attack=delay",
        "required": False,
        "type": "str",
        "choices": lambda: list(CONFIG_KEYS),
    },
    "out": {"description": "Report file, written atomically; stdout when omitted", "required": False, "type": "str"},
    "format": {"description": "Report format", "required": False, "type": "str", "choices": list(FORMATS), "default": "csv"},
    "threads": {"description": "Worker process cap; results do not depend on it", "required": False, "type": "int"},
    "seed": {"description": "Base seed, unsigned 64-bit (falls back to QSDC_SEED)", "required": False, "type": "int"},
    "emit-config": {"description": "Also write the effective configuration to this path", "required": False, "type": "str"},
}

CONFIG_HELP = "Configuration keys:\n" + "\n".join(
    f"  {key:<22} {entry.description} (Default: {entry.default or '-'})" for key, entry in CONFIG_KEYS.items()
)


def _string_param(params_dict: dict, name: str) -> Optional[str]:
    value = params_dict.get(name)
    if value is True:
        raise ConfigurationError(f"--{name} needs a value", key=name)
    return value


def _int_param(params_dict: dict, name: str) -> Optional[int]:
    value = _string_param(params_dict, name)
    if value is None:
        return None
    try:
        return int(value, 0)
    except ValueError:
        raise ConfigurationError(f"--{name} must be an integer, got {value!r}", key=name) from None


def _overrides(params_dict: dict) -> List[Tuple[str, str]]:
    value = _string_param(params_dict, "set")
    if not value:
        return []
    try:
        return split_assignments(value)
    except ValueError as e:
        raise ConfigurationError(f"--set: {e}", key="set") from None


def _load_spec(params_dict: dict) -> ExperimentSpec:
    if not isinstance(params_dict, dict):
        raise ValueError("Invalid parameter params_dict passed to a qsdc handler")

    spec = load_config(
        _string_param(params_dict, "config"),
        _overrides(params_dict),
        seed=_int_param(params_dict, "seed"),
        threads=_int_param(params_dict, "threads"),
    )
    emit_path = _string_param(params_dict, "emit-config")
    if emit_path:
        emit_config(spec, emit_path)
    return spec


def _report_format(params_dict: dict) -> str:
    output_format = (_string_param(params_dict, "format") or "csv").lower()
    if output_format not in FORMATS:
        raise ConfigurationError(
            f"--format must be one of {', '.join(FORMATS)}, got {output_format!r}", key="format"
        )
    return output_format


def _emit(say, results, params_dict: dict) -> None:
    out = _string_param(params_dict, "out")
    text = emit_report(results, _report_format(params_dict), out)
    if out:
        say(f"Wrote {len(results)} row(s) to {out}")
    else:
        say(text.rstrip("\n"))


@command_meta(
    name="help",
    description="Show help information for commands",
    arguments={
        "command": {
            "description": "Specific command to get help for",
            "required": False,
            "type": "str",
        }
    },
    examples=["qsdc help", "qsdc help sweep"],
)
def handle_help(say, command_name=None) -> int:
    """Handle help command using the help system."""
    return EXIT_OK if handle_help_command(say, command_name) else 1


@command_meta(
    name="run",
    description="Run one Monte Carlo experiment and report detection and Eve's recovery",
    arguments=_EXPERIMENT_ARGUMENTS,
    examples=[
        "qsdc run --config experiments/delay.env",
        "qsdc run --set n_pairs=1000 attack=delay variant=improved --threads 8",
        "qsdc run --set attack=measure-resend n_pairs=8 --format json --out mr.json",
    ],
    extra_help=CONFIG_HELP,
)
def handle_run(say, params_dict) -> int:
    spec = _load_spec(params_dict)
    result = run_trials(spec)
    _emit(say, [result], params_dict)
    return EXIT_OK


@command_meta(
    name="sweep",
    description="Run one experiment per value of a configuration key",
    arguments=_EXPERIMENT_ARGUMENTS,
    examples=[
        "qsdc sweep --set attack=ipe sweep.key=ipe_detuning sweep.values=0,0.1,0.3,1.0",
        "qsdc sweep --config experiments/ipe-curve.env --out ipe.csv",
    ],
    extra_help=f"Sweepable keys: {', '.join(SWEEPABLE_KEYS)}",
)
def handle_sweep(say, params_dict) -> int:
    spec = _load_spec(params_dict)
    if spec.sweep is None:
        raise ConfigurationError("sweep needs sweep.key and sweep.values", key="sweep.key")
    rows = run_sweep(spec)
    _emit(say, rows, params_dict)
    return EXIT_OK


@command_meta(
    name="compare",
    description="Every attack against both protocol variants, one row each",
    arguments=_EXPERIMENT_ARGUMENTS,
    examples=["qsdc compare --set n_trials=2000", "qsdc compare --format json --out table.json"],
    extra_help=(
        f"Rows: variants {', '.join(v.value for v in Variant)} x "
        f"attacks {', '.join(k.value for k in AttackKind)}."
    ),
)
def handle_compare(say, params_dict) -> int:
    spec = _load_spec(params_dict)
    rows = compare_matrix(spec)
    _emit(say, rows, params_dict)
    return EXIT_OK


@command_meta(
    name="selftest",
    description="Check the Bell algebra against the state-vector oracle and run honest protocols",
    examples=["qsdc selftest"],
    group="utility",
)
def handle_selftest(say, params_dict=None) -> int:
    results = run_selftest()
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        say(f"{status} {result.name}" + (f" ({result.detail})" if result.detail else ""))
    failed = [r.name for r in results if not r.passed]
    if failed:
        say(f"{len(failed)} check(s) failed: {', '.join(failed)}")
        return EXIT_SELFTEST_FAILED
    say(f"all {len(results)} checks passed")
    return EXIT_OK


@command_meta(
    name="storage",
    description="Quantum memory and channel exposure of one-way vs two-step direct communication",
    arguments={
        "n": {"description": "Message qubits N", "required": False, "type": "int", "default": 100},
        "t": {"description": "One-way transmission time", "required": False, "type": "float", "default": 1.0},
        "format": _EXPERIMENT_ARGUMENTS["format"],
        "out": _EXPERIMENT_ARGUMENTS["out"],
    },
    examples=["qsdc storage --n 100 --t 1"],
    group="utility",
)
def handle_storage(say, params_dict) -> int:
    n = _int_param(params_dict, "n")
    n = 100 if n is None else n
    t_text = _string_param(params_dict, "t") or "1.0"
    try:
        t = float(t_text)
    except ValueError:
        raise ConfigurationError(f"--t must be a number, got {t_text!r}", key="t") from None

    rows = [storage_row(storage_cost(scheme, n, t), n, t) for scheme in StorageScheme]
    out = _string_param(params_dict, "out")
    text = emit_storage_table(rows, _report_format(params_dict), out)
    say(f"Wrote storage table to {out}" if out else text.rstrip("\n"))
    return EXIT_OK
