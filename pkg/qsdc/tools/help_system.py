"""
Help text for the qsdc command line.

Sub-command handlers declare their flags, examples and group through
``command_meta``; the decorator also registers them in ``COMMAND_REGISTRY``,
which is what the dispatcher's command regex and ``qsdc help`` are built from.
"""

import difflib
import logging
import re
from functools import wraps
from typing import Any, Callable, Dict, List, NamedTuple, Optional

logger = logging.getLogger(__name__)

# sub-command name -> handler
COMMAND_REGISTRY: Dict[str, Callable] = {}

GROUP_TITLES = {
    "experiment": "Experiments",
    "utility": "Utilities",
}

_CACHED_HELP_TEXT: Optional[str] = None


class CommandHelp(NamedTuple):
    name: str
    description: str
    arguments: Dict[str, Dict[str, Any]]
    examples: List[str]
    group: str
    extra_help: str


def command_meta(
    name: str,
    description: str,
    arguments: Optional[Dict[str, Dict[str, Any]]] = None,
    examples: Optional[List[str]] = None,
    group: str = "experiment",
    extra_help: Optional[str] = None,
):
    """
    Decorator to attach help metadata to a sub-command handler.

    Args:
        name: Sub-command name (e.g., 'sweep'); 'help' itself is not registered
        description: One line shown in the command list
        arguments: Flag name -> {"description", "type", "required", "choices", "default"};
            ``choices`` and ``default`` may be callables, resolved when help is shown
        examples: Example command lines
        group: Key of ``GROUP_TITLES`` the command is listed under
        extra_help: Text appended to ``qsdc help <name>``
    """
    if group not in GROUP_TITLES:
        raise ValueError(f"unknown help group {group!r} for command {name!r}")

    def attach_metadata(func):
        func._command_help = CommandHelp(
            name, description, arguments or {}, examples or [], group, extra_help or ""
        )
        if name != "help":
            COMMAND_REGISTRY[name] = func

        @wraps(func)
        def wrapper(*args, **kwargs):
            return func(*args, **kwargs)

        return wrapper

    return attach_metadata


def _resolve(value):
    if not callable(value):
        return value
    try:
        return value()
    except Exception as e:
        logger.error(f"Error resolving help value: {e}")
        return "<unavailable>"


def _command_help(command_name: str) -> Optional[CommandHelp]:
    func = COMMAND_REGISTRY.get(command_name)
    return getattr(func, "_command_help", None)


def _usage(meta: CommandHelp) -> str:
    parts = ["qsdc", meta.name]
    for arg_name, arg_info in meta.arguments.items():
        flag = f"--{arg_name} <{arg_info.get('type', 'value')}>"
        parts.append(flag if arg_info.get("required") else f"[{flag}]")
    return " ".join(parts)


def _argument_line(arg_name: str, arg_info: Dict[str, Any]) -> str:
    line = f"  --{arg_name:<12} {arg_info.get('description', '')}"
    if arg_info.get("required"):
        line += " (required)"
    choices = _resolve(arg_info.get("choices"))
    if isinstance(choices, (list, tuple)) and choices:
        shown = ", ".join(str(c) for c in choices[:10])
        line += f". Options: {shown}{', ...' if len(choices) > 10 else ''}"
    if "default" in arg_info:
        line += f". Default: {_resolve(arg_info['default'])}"
    return line


def format_command_help(command_name: str, detailed: bool = False) -> str:
    """
    Help for one sub-command.

    Args:
        command_name: Registered sub-command
        detailed: Usage, flags, examples and extra text instead of the one-liner
    """
    meta = _command_help(command_name)
    if meta is None:
        return f"Command '{command_name}' not found."
    if not detailed:
        return f"{command_name} - {meta.description}"

    lines = [f"{meta.name} - {meta.description}", "", f"Usage: {_usage(meta)}"]
    if meta.arguments:
        lines += ["", "Flags:"]
        lines += [_argument_line(arg_name, info) for arg_name, info in meta.arguments.items()]
    if meta.examples:
        lines += ["", "Examples:"]
        lines += [f"  {example}" for example in meta.examples]
    if meta.extra_help.strip():
        lines += ["", meta.extra_help.strip()]
    return "\n".join(lines)


def _build_general_help_text() -> str:
    lines = ["Usage: qsdc <command> [flags]"]
    for group, title in GROUP_TITLES.items():
        members = sorted(
            meta for meta in map(_command_help, COMMAND_REGISTRY) if meta and meta.group == group
        )
        if not members:
            continue
        lines += ["", f"{title}:"]
        lines += [f"  {meta.name:<10} {meta.description}" for meta in members]
    lines += ["", "For detailed help on any command, use: `qsdc help <command>` or `qsdc <command> --help`"]
    return "\n".join(lines)


def get_cached_general_help() -> str:
    """Command list; built once, after every handler has registered."""
    global _CACHED_HELP_TEXT
    if _CACHED_HELP_TEXT is None:
        _CACHED_HELP_TEXT = _build_general_help_text()
    return _CACHED_HELP_TEXT


def remove_help_from_command(command_name: str) -> str:
    """'help sweep' and 'sweep --help' both become 'sweep'."""
    if command_name and check_help_flag(command_name):
        return re.sub(r"^help\s+|\s+-{0,2}h(elp)?$", "", command_name).strip()
    return command_name


def suggest_commands(command_name: str) -> List[str]:
    """Registered commands that contain, or look like, ``command_name``."""
    contained = [cmd for cmd in COMMAND_REGISTRY if command_name.lower() in cmd.lower()]
    close = difflib.get_close_matches(command_name.lower(), list(COMMAND_REGISTRY), n=3)
    return sorted(set(contained + close))


def handle_help_command(say: Callable[[str], Any], command_name: Optional[str] = None) -> bool:
    """
    Print the command list, or the detailed help of one command.

    Args:
        say: Output function, ``print`` from the command line
        command_name: Command to describe; may still carry 'help' or '--help'

    Returns:
        True if help was shown, False if the command is unknown
    """
    try:
        if not command_name:
            say(get_cached_general_help())
            return True

        command_name = remove_help_from_command(command_name)
        if command_name in COMMAND_REGISTRY:
            say(format_command_help(command_name, detailed=True))
            return True

        suggestions = suggest_commands(command_name)
        if suggestions:
            say(f"Command `{command_name}` not found. Did you mean: {', '.join(suggestions[:5])}?")
        else:
            say(f"Command `{command_name}` not found. Use `qsdc help` to see all available commands.")
        return False

    except Exception as e:
        logger.error(f"Error in handle_help_command: {e}")
        say("Sorry, I encountered an error while generating help information.")
        return False


def check_help_flag(command_line: str) -> bool:
    """True for 'help <command>' and for a trailing 'help', '-h' or '--help'."""
    help_pattern = re.compile(r"^help\b\s.+|.*\S.*\s(-{0,2}h(elp)?)$")
    return bool(help_pattern.match(command_line))
