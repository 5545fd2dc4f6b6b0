import logging
import shlex
import sys
from typing import Callable, List, Optional

from config import config  # noqa: F401  sets up logging
from qsdc.errors import ConfigurationError, QsdcError
from qsdc.tools.helpers import get_base_command, get_named_and_positional_params
from qsdc.tools.help_system import check_help_flag, handle_help_command

from cli_handlers.handlers import (
    handle_compare,
    handle_help,
    handle_run,
    handle_selftest,
    handle_storage,
    handle_sweep,
)

logger = logging.getLogger(__name__)

EXIT_UNKNOWN_COMMAND = 1
EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3


def _stderr(message: str) -> None:
    print(message, file=sys.stderr)


def main(
    argv: Optional[List[str]] = None,
    say: Callable[[str], None] = print,
    complain: Callable[[str], None] = _stderr,
) -> int:
    """
    Command line entry point.

    Returns:
        Exit status: 0 ok, 1 unknown command, 2 configuration error,
        3 runtime error, 4 selftest failure
    """
    argv = sys.argv[1:] if argv is None else argv
    command_line = shlex.join(argv).strip() or "help"

    base_command = get_base_command(command_line)

    named_params, positional_params = get_named_and_positional_params(command_line)

    if check_help_flag(command_line):
        return 0 if handle_help_command(say, base_command or command_line) else EXIT_UNKNOWN_COMMAND

    commands = {
        "run": lambda: handle_run(say, named_params),
        "sweep": lambda: handle_sweep(say, named_params),
        "compare": lambda: handle_compare(say, named_params),
        "selftest": lambda: handle_selftest(say, named_params),
        "storage": lambda: handle_storage(say, named_params),
        "help": lambda: handle_help(say),
    }

    command_function = commands.get(base_command)

    if not command_function:
        complain(f"qsdc: I couldn't understand `{command_line}`. Type `qsdc help` for assistance.")
        return EXIT_UNKNOWN_COMMAND

    if positional_params:
        logger.warning(f"ignoring unexpected argument(s): {' '.join(positional_params)}")

    try:
        return command_function()
    except ConfigurationError as e:
        key = f" [{e.key}]" if e.key else ""
        logger.error(f"configuration error{key}: {e}")
        complain(f"qsdc: configuration error{key}: {e}")
        return EXIT_CONFIG_ERROR
    except QsdcError as e:
        logger.error(f"An error occurred and it was caught at main: {e}")
        complain(f"qsdc: {e}")
        return EXIT_RUNTIME_ERROR
    except Exception as e:
        logger.exception(f"An unexpected error occurred and it was caught at main: {e}")
        complain("qsdc: an internal error occurred, see the log for details.")
        return EXIT_RUNTIME_ERROR


# Main Entry Point
if __name__ == "__main__":
    sys.exit(main())
