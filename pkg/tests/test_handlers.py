import csv
import io
import unittest.mock as mock
from unittest.mock import MagicMock

import pytest

from cli_handlers.handlers import (
    EXIT_OK,
    EXIT_SELFTEST_FAILED,
    handle_compare,
    handle_help,
    handle_run,
    handle_selftest,
    handle_storage,
    handle_sweep,
)
from qsdc.errors import ConfigurationError
from qsdc.tools.selftest import CheckResult


def _rows(mock_say):
    return list(csv.DictReader(io.StringIO(mock_say.call_args[0][0])))


def test_handle_run_prints_csv_report(small_experiment):
    """Test run without --out prints the report."""
    mock_say = MagicMock()

    assert handle_run(mock_say, {"config": small_experiment}) == EXIT_OK

    mock_say.assert_called_once()
    (row,) = _rows(mock_say)
    assert row["variant"] == "original"
    assert row["attack"] == "none"
    assert row["n_pairs"] == "16"
    assert row["detection"] == "0"


def test_handle_run_with_overrides(small_experiment):
    """Test --set overrides on top of the experiment file."""
    mock_say = MagicMock()

    handle_run(mock_say, {"config": small_experiment, "set": "attack=delay delay_ns=0.25"})

    (row,) = _rows(mock_say)
    assert row["attack"] == "delay"
    assert row["param"] == "0.25"
    assert row["recovery"] == "1"


def test_handle_run_writes_report_and_config(small_experiment, tmp_path):
    """Test --out and --emit-config write files."""
    mock_say = MagicMock()
    out = tmp_path / "report.json"
    effective = tmp_path / "effective.env"

    handle_run(
        mock_say,
        {
            "config": small_experiment,
            "out": str(out),
            "format": "json",
            "emit-config": str(effective),
        },
    )

    assert "Wrote 1 row(s)" in mock_say.call_args[0][0]
    assert out.read_text().lstrip().startswith("[")
    assert "n_pairs=16" in effective.read_text()


@mock.patch("cli_handlers.handlers.run_trials")
def test_handle_run_passes_flags(mock_run_trials, small_experiment):
    """Test --seed and --threads reach the experiment."""
    mock_run_trials.return_value = MagicMock()
    with mock.patch("cli_handlers.handlers.emit_report", return_value="report\n"):
        handle_run(MagicMock(), {"config": small_experiment, "seed": "0x10", "threads": "3"})

    spec = mock_run_trials.call_args[0][0]
    assert spec.base_seed == 16
    assert spec.threads == 3


@pytest.mark.parametrize(
    "params,key",
    [
        ({"config": True}, "config"),
        ({"threads": "many"}, "threads"),
        ({"set": "n_pairs"}, "set"),
        ({"set": "n_pairs=1"}, "n_pairs"),
        ({"set": "n_trials=1", "format": "xml"}, "format"),
    ],
)
def test_handle_run_configuration_errors(params, key):
    """Test bad parameters raise ConfigurationError naming the key."""
    with pytest.raises(ConfigurationError) as exc_info:
        handle_run(MagicMock(), params)
    assert exc_info.value.key == key


def test_handle_sweep_one_row_per_value(small_experiment):
    mock_say = MagicMock()

    handle_sweep(
        mock_say,
        {"config": small_experiment, "set": "attack=ipe sweep.key=ipe_detuning sweep.values=0,3"},
    )

    rows = _rows(mock_say)
    assert [row["param"] for row in rows] == ["0", "3"]
    assert rows[0]["recovery"] == "1"


def test_handle_sweep_without_sweep_keys(small_experiment):
    with pytest.raises(ConfigurationError):
        handle_sweep(MagicMock(), {"config": small_experiment})


def test_handle_compare_prints_every_pair():
    mock_say = MagicMock()

    handle_compare(mock_say, {"set": "n_pairs=16 n_trials=3"})

    rows = _rows(mock_say)
    assert len(rows) == 8
    assert {row["variant"] for row in rows} == {"original", "improved"}


def test_handle_selftest_success():
    mock_say = MagicMock()

    assert handle_selftest(mock_say) == EXIT_OK

    lines = [call[0][0] for call in mock_say.call_args_list]
    assert all(line.startswith("PASS") for line in lines[:-1])
    assert "checks passed" in lines[-1]


@mock.patch("cli_handlers.handlers.run_selftest")
def test_handle_selftest_failure(mock_run_selftest):
    mock_run_selftest.return_value = [
        CheckResult("bell-apply-oracle", True, "32/32 entries agree"),
        CheckResult("honest-runs", False, "original seed=3: aborted-at-bell-check"),
    ]
    mock_say = MagicMock()

    assert handle_selftest(mock_say) == EXIT_SELFTEST_FAILED

    calls = mock_say.call_args_list
    assert calls[1][0][0].startswith("FAIL honest-runs")
    assert "1 check(s) failed: honest-runs" in calls[2][0][0]


def test_handle_storage_table():
    mock_say = MagicMock()

    assert handle_storage(mock_say, {"n": "10", "t": "2"}) == EXIT_OK

    rows = _rows(mock_say)
    assert rows[0]["scheme"] == "one-way"
    assert (rows[0]["particles_stored"], rows[0]["storage_time"]) == ("20", "8")
    assert (rows[1]["particles_stored"], rows[1]["storage_time"]) == ("10", "4")


def test_handle_storage_defaults():
    mock_say = MagicMock()
    handle_storage(mock_say, {})
    assert _rows(mock_say)[1]["n"] == "100"


def test_handle_storage_bad_values():
    with pytest.raises(ConfigurationError):
        handle_storage(MagicMock(), {"t": "soon"})
    with pytest.raises(ConfigurationError):
        handle_storage(MagicMock(), {"n": "0"})


def test_handle_help():
    mock_say = MagicMock()
    assert handle_help(mock_say) == EXIT_OK
    assert "Experiments:" in mock_say.call_args[0][0]
    assert handle_help(mock_say, "launch") == 1
