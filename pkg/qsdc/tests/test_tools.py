from unittest.mock import MagicMock

import pytest

from qsdc.tools.help_system import (
    COMMAND_REGISTRY,
    check_help_flag,
    command_meta,
    format_command_help,
    handle_help_command,
    remove_help_from_command,
    suggest_commands,
)
from qsdc.tools.helpers import (
    get_base_command,
    get_named_and_positional_params,
    get_parameters_line,
    split_assignments,
)


def test_get_named_and_positional_params_when_no_params():
    named_params, positional_params = get_named_and_positional_params("selftest")
    assert len(named_params) == 0
    assert len(positional_params) == 0


def test_get_named_and_positional_params_when_no_key_value_params():
    named_params, positional_params = get_named_and_positional_params("run something else")
    assert len(named_params) == 0
    assert "something" == positional_params[0]
    assert "else" == positional_params[1]


def test_get_named_and_positional_params_when_single_value_params_with_equals_separator():
    named_params, positional_params = get_named_and_positional_params(
        "run --config=exp.env --threads=4"
    )
    assert "exp.env" == named_params.get("config")
    assert "4" == named_params.get("threads")
    assert not positional_params


def test_get_named_and_positional_params_when_single_value_params_with_no_equals_separator():
    named_params, positional_params = get_named_and_positional_params(
        "run --config  exp.env --format  json"
    )
    assert "exp.env" == named_params.get("config")
    assert "json" == named_params.get("format")
    assert len(positional_params) == 0


def test_get_named_and_positional_params_when_mixture_param_types():
    named_params, positional_params = get_named_and_positional_params(
        "sweep paramA paramB --set sweep.values=0, 0.1 ,0.3 --out=ipe.csv"
    )
    assert "sweep.values=0,0.1,0.3" == named_params.get("set")
    assert "ipe.csv" == named_params.get("out")
    assert "paramA" == positional_params[0]
    assert "paramB" == positional_params[1]


def test_get_named_and_positional_params_when_value_has_spaces():
    named_params, positional_params = get_named_and_positional_params(
        "run --set n_pairs=1000 attack=delay variant=improved --threads 8"
    )
    assert "n_pairs=1000 attack=delay variant=improved" == named_params.get("set")
    assert "8" == named_params.get("threads")
    assert not positional_params


def test_get_named_and_positional_params_when_parameter_repeats():
    named_params, _ = get_named_and_positional_params("run --set n_pairs=8 --set attack=ipe")
    assert named_params.get("set") == "n_pairs=8 attack=ipe"


def test_get_dict_when_trailing_commas_between_params():
    named_params, _ = get_named_and_positional_params("sweep --set sweep.values=1,,, 2,,,, ")
    assert "sweep.values=1,2" == named_params.get("set")


def test_get_dict_with_flag_parameters():
    named_params, positional_params = get_named_and_positional_params(
        "run paramA --emit-config --seed=0x10"
    )
    assert named_params.get("emit-config") is True
    assert named_params.get("seed") == "0x10"
    assert "paramA" == positional_params[0]


def test_get_named_and_positional_params_when_not_a_string():
    assert get_named_and_positional_params(None) == ({}, [])
    assert get_named_and_positional_params("   ") == ({}, [])


@pytest.mark.parametrize(
    "command_line,base,params",
    [
        ("run --threads 2", "run", "--threads 2"),
        ("storage", "storage", ""),
        ("help", "help", ""),
        ("help sweep", "help sweep", ""),
        ("selftest h", "selftest h", ""),
    ],
)
def test_base_command_and_parameters_line(command_line, base, params):
    assert get_base_command(command_line) == base
    assert get_parameters_line(command_line) == params


def test_base_command_unknown():
    assert get_base_command("launch --now") is None
    assert get_base_command("runner") is None
    assert get_parameters_line("launch --now") is None


def test_split_assignments():
    assert split_assignments("n_pairs=8 attack=ipe") == [("n_pairs", "8"), ("attack", "ipe")]
    assert split_assignments("sweep.values=0,0.5") == [("sweep.values", "0,0.5")]
    with pytest.raises(ValueError):
        split_assignments("n_pairs")
    with pytest.raises(ValueError):
        split_assignments("=3")


def test_registry_lists_every_subcommand():
    assert sorted(COMMAND_REGISTRY) == ["compare", "run", "selftest", "storage", "sweep"]
    assert "help" not in COMMAND_REGISTRY


def test_command_meta_rejects_unknown_group():
    with pytest.raises(ValueError):
        command_meta(name="launch", description="x", group="rockets")
    assert "launch" not in COMMAND_REGISTRY


@pytest.mark.parametrize(
    "command_line,expected",
    [
        ("help run", True),
        ("run --help", True),
        ("run -h", True),
        ("run help", True),
        ("run --threads 2", False),
        ("help", False),
    ],
)
def test_check_help_flag(command_line, expected):
    assert check_help_flag(command_line) is expected


def test_remove_help_from_command():
    assert remove_help_from_command("help sweep") == "sweep"
    assert remove_help_from_command("sweep --help") == "sweep"
    assert remove_help_from_command("sweep") == "sweep"


def test_format_command_help_detailed():
    text = format_command_help("run", detailed=True)
    assert text.startswith("run")
    assert "Usage: qsdc run [--config <str>]" in text
    assert "Report format. Options: csv, json. Default: csv" in text
    assert "n_pairs" in text
    assert format_command_help("launch") == "Command 'launch' not found."


def test_handle_help_command_general():
    say = MagicMock()
    assert handle_help_command(say) is True
    text = say.call_args[0][0]
    assert text.startswith("Usage: qsdc <command> [flags]")
    experiments, utilities = text.split("Utilities:")
    for name in ("compare", "run", "sweep"):
        assert f"  {name} " in experiments
    for name in ("selftest", "storage"):
        assert f"  {name} " in utilities


def test_handle_help_command_specific_and_unknown():
    say = MagicMock()
    assert handle_help_command(say, "help storage") is True
    assert "Usage: qsdc storage" in say.call_args[0][0]

    assert handle_help_command(say, "swe") is False
    assert "Did you mean: sweep" in say.call_args[0][0]

    assert handle_help_command(say, "launch") is False
    assert "not found" in say.call_args[0][0]


def test_suggest_commands_uses_substrings_and_close_matches():
    assert suggest_commands("s") == ["selftest", "storage", "sweep"]
    assert suggest_commands("sweeep") == ["sweep"]
    assert suggest_commands("launch") == []
