from unittest.mock import MagicMock, patch

from qsdc.errors import ConfigurationError, HarnessError
from qsdc_main import EXIT_CONFIG_ERROR, EXIT_RUNTIME_ERROR, EXIT_UNKNOWN_COMMAND, main


class MockCommand:
    """Helper class to create reusable mock setups for commands"""

    @staticmethod
    def setup_mocks():
        """Set up all necessary mocks for main testing - only command handlers"""
        return {
            "handle_run": patch("qsdc_main.handle_run", return_value=0),
            "handle_sweep": patch("qsdc_main.handle_sweep", return_value=0),
            "handle_compare": patch("qsdc_main.handle_compare", return_value=0),
            "handle_selftest": patch("qsdc_main.handle_selftest", return_value=0),
            "handle_storage": patch("qsdc_main.handle_storage", return_value=0),
            "handle_help": patch("qsdc_main.handle_help", return_value=0),
            "handle_help_command": patch("qsdc_main.handle_help_command", return_value=True),
        }


class TestCliCommands:
    """Test class for the command line dispatch"""

    def setup_method(self):
        self.mock_say = MagicMock()
        self.mock_complain = MagicMock()
        self.mocks = MockCommand.setup_mocks()

        for mock_name, mock_patch in self.mocks.items():
            setattr(self, f"mock_{mock_name}", mock_patch.start())

    def teardown_method(self):
        for mock_patch in self.mocks.values():
            mock_patch.stop()

    def call_main(self, *argv):
        """Helper method to run main with captured output"""
        return main(list(argv), say=self.mock_say, complain=self.mock_complain)

    def test_run_command_success(self):
        """Test run command dispatch with its parameters"""
        assert self.call_main("run", "--config", "exp.env", "--threads=4") == 0

        self.mock_handle_run.assert_called_once_with(
            self.mock_say, {"config": "exp.env", "threads": "4"}
        )

    def test_run_command_with_quoted_overrides(self):
        """Test a quoted --set value stays one parameter"""
        self.call_main("run", "--set", "n_pairs=1000 attack=delay", "--set", "variant=improved")

        params = self.mock_handle_run.call_args[0][1]
        assert params["set"] == "n_pairs=1000 attack=delay variant=improved"

    def test_sweep_command_success(self):
        self.call_main("sweep", "--set", "sweep.key=ipe_detuning", "sweep.values=0,0.1")

        self.mock_handle_sweep.assert_called_once()

    def test_compare_command_success(self):
        self.call_main("compare", "--format", "json")

        self.mock_handle_compare.assert_called_once_with(self.mock_say, {"format": "json"})

    def test_storage_command_success(self):
        self.call_main("storage", "--n", "10")

        self.mock_handle_storage.assert_called_once_with(self.mock_say, {"n": "10"})

    def test_selftest_exit_code_passes_through(self):
        """Test the handler's exit code is returned"""
        self.mock_handle_selftest.return_value = 4

        assert self.call_main("selftest") == 4

    def test_no_arguments_shows_help(self):
        assert self.call_main() == 0

        self.mock_handle_help.assert_called_once_with(self.mock_say)

    def test_unknown_command(self):
        """Test unknown command handling"""
        assert self.call_main("launch", "--now") == EXIT_UNKNOWN_COMMAND

        self.mock_complain.assert_called_once()
        call_args = self.mock_complain.call_args[0][0]
        assert "couldn't understand" in call_args
        assert "help" in call_args

    def test_help_flag_command(self):
        """Test help flag handling"""
        assert self.call_main("sweep", "--help") == 0

        self.mock_handle_help_command.assert_called_once_with(self.mock_say, "sweep")
        self.mock_handle_sweep.assert_not_called()

    def test_help_for_unknown_command(self):
        self.mock_handle_help_command.return_value = False

        assert self.call_main("help", "launch") == EXIT_UNKNOWN_COMMAND

    def test_configuration_error_exit_code(self):
        """Test configuration errors map to exit code 2 and name the key"""
        self.mock_handle_run.side_effect = ConfigurationError("must be at least 2", key="n_pairs")

        assert self.call_main("run") == EXIT_CONFIG_ERROR

        call_args = self.mock_complain.call_args[0][0]
        assert "[n_pairs]" in call_args
        assert "must be at least 2" in call_args

    def test_runtime_error_exit_code(self):
        self.mock_handle_compare.side_effect = HarnessError("C set is empty")

        assert self.call_main("compare") == EXIT_RUNTIME_ERROR
        assert "C set is empty" in self.mock_complain.call_args[0][0]

    def test_unexpected_error_exit_code(self):
        self.mock_handle_storage.side_effect = KeyError("boom")

        assert self.call_main("storage") == EXIT_RUNTIME_ERROR
        assert "internal error" in self.mock_complain.call_args[0][0]

    def test_extra_positional_arguments_are_ignored(self):
        assert self.call_main("run", "extra") == 0

        self.mock_handle_run.assert_called_once_with(self.mock_say, {})


def test_storage_end_to_end():
    """Test a real sub-command through main"""
    mock_say = MagicMock()

    assert main(["storage", "--n", "3", "--t", "0.5"], say=mock_say) == 0

    lines = mock_say.call_args[0][0].splitlines()
    assert lines[0] == "scheme,n,t,particles_stored,storage_time,intercept_exposure"
    assert lines[1] == "one-way,3,0.5,6,2,6"
    assert lines[2] == "two-step,3,0.5,3,1,6"
