import logging
import re
import shlex
from typing import Dict, List, Optional, Tuple, Union

from qsdc.tools.help_system import COMMAND_REGISTRY

logger = logging.getLogger(__name__)

ParamValue = Union[str, bool]


def _is_flag(token: str) -> bool:
    return token.startswith("-") and len(token) > 1


def _clean_comma_separated_value(value: str) -> str:
    """'0, 0.1 ,,0.3' -> '0,0.1,0.3'"""
    return ",".join(part.strip() for part in value.split(",") if part.strip())


def _store(named_params: Dict[str, ParamValue], key: Optional[str], values: List[str]) -> None:
    if key is None or not key.strip():
        return
    key = key.strip()
    value = " ".join(values).strip()
    if not value:
        named_params[key] = True
        return
    value = _clean_comma_separated_value(value)
    previous = named_params.get(key)
    named_params[key] = f"{previous} {value}" if isinstance(previous, str) else value


def get_named_and_positional_params(command_line: str) -> Tuple[Dict[str, ParamValue], List[str]]:
    """
    Parse a sub-command line into named parameters and positional parameters

    ``--key=value`` and ``--key value`` both set a value, and the value keeps every
    following token up to the next one starting with a dash. A key with no value is
    a flag (True). A key given again appends to its value with a space, which is how
    repeated ``--set`` flags accumulate. Tokens before the first key are positional.

    Args:
        command_line (str): The command line string, starting with the sub-command

    Returns:
        tuple: (parameter name without dashes -> value, positional tokens)

    Examples:
        >>> get_named_and_positional_params("run --set n_pairs=1000 attack=delay --set variant=improved")
        ({'set': 'n_pairs=1000 attack=delay variant=improved'}, [])

        >>> get_named_and_positional_params("sweep --set sweep.values=0, 0.1 ,0.3 --emit-config")
        ({'set': 'sweep.values=0,0.1,0.3', 'emit-config': True}, [])
    """
    if not isinstance(command_line, str):
        logger.error(f"command_line must be a string. command_line: {command_line}")
        return {}, []

    parameters_line = get_parameters_line(command_line.strip())
    if not parameters_line:
        return {}, []

    try:
        tokens = shlex.split(parameters_line)
    except ValueError as e:
        logger.error(f"Error parsing command line '{parameters_line}': {e}")
        return {}, []

    named_params: Dict[str, ParamValue] = {}
    positional_params: List[str] = []
    current_key: Optional[str] = None
    values: List[str] = []

    for token in tokens:
        if _is_flag(token):
            _store(named_params, current_key, values)
            current_key, _, first_value = token.lstrip("-").partition("=")
            values = [first_value] if first_value else []
        elif current_key is not None:
            values.append(token)
        elif len(token) > 1:
            positional_params.append(token.strip())
    _store(named_params, current_key, values)

    return named_params, positional_params


def _split_command_line(command_line: str) -> Optional[Tuple[str, str]]:
    """(sub-command with any 'help' marker, rest of the line), or None for an unknown command."""
    names = "|".join(map(re.escape, sorted(COMMAND_REGISTRY, key=len, reverse=True)))
    pattern = rf"^(?P<base>help$|(?:help\s)?(?:{names})(?:\s(?:help|h))?)\b(?P<params>.*)"
    match = re.match(pattern, command_line or "")
    if match is None:
        return None
    return match.group("base").strip(), match.group("params").strip()


def get_base_command(command_line: str) -> Optional[str]:
    split = _split_command_line(command_line)
    return split[0] if split else None


def get_parameters_line(command_line: str) -> Optional[str]:
    split = _split_command_line(command_line)
    return split[1] if split else None


def split_assignments(value: str) -> List[Tuple[str, str]]:
    """
    Split ``"a=1 b=2"`` into ``[("a", "1"), ("b", "2")]``.

    Raises:
        ValueError: an item has no ``=``
    """
    assignments = []
    for item in shlex.split(value):
        key, sep, val = item.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"expected key=value, got {item!r}")
        assignments.append((key.strip(), val.strip()))
    return assignments
