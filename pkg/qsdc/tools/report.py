import csv
import io
import json
import logging
import os
import tempfile
from typing import Any, Dict, List, Optional, Sequence

from qsdc.errors import ConfigurationError, ReportWriteError
from qsdc.experiment.analytic import StorageCost, intercept_exposure
from qsdc.experiment.trials import AggregateResult

logger = logging.getLogger(__name__)

REPORT_FIELDS = (
    "variant",
    "attack",
    "n_pairs",
    "param",
    "detection",
    "detection_se",
    "recovery",
    "recovery_se",
    "c_set_error",
)

STORAGE_FIELDS = ("scheme", "n", "t", "particles_stored", "storage_time", "intercept_exposure")

FORMATS = ("csv", "json")


def _number(value: Any) -> Any:
    """Six significant digits for floats; everything else as is."""
    if isinstance(value, float):
        return float(f"{value:.6g}")
    return value


def result_row(result: AggregateResult) -> Dict[str, Any]:
    return {name: _number(getattr(result, name)) for name in REPORT_FIELDS}


def storage_row(cost: StorageCost, n: int, t: float) -> Dict[str, Any]:
    return {
        "scheme": cost.scheme.value,
        "n": n,
        "t": _number(float(t)),
        "particles_stored": cost.particles_stored,
        "storage_time": _number(float(cost.storage_time)),
        "intercept_exposure": intercept_exposure(cost.scheme, n),
    }


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return value


def render_rows(rows: Sequence[Dict[str, Any]], fields: Sequence[str], output_format: str) -> str:
    if output_format == "json":
        return json.dumps([{name: row[name] for name in fields} for row in rows], indent=2) + "\n"
    if output_format != "csv":
        raise ConfigurationError(
            f"unknown report format {output_format!r}; use {' or '.join(FORMATS)}", key="format"
        )
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([_cell(row[name]) for name in fields])
    return buffer.getvalue()


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path``, then rename it over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    tmp_name = None
    try:
        with tempfile.NamedTemporaryFile(
            "w", dir=directory, prefix=".qsdc-", suffix=".tmp", delete=False, encoding="utf-8"
        ) as tmp:
            tmp_name = tmp.name
            tmp.write(text)
        os.replace(tmp_name, path)
    except OSError as e:
        if tmp_name and os.path.exists(tmp_name):
            os.unlink(tmp_name)
        logger.error(f"could not write {path}: {e}")
        raise ReportWriteError(f"cannot write report ({e.strerror or e})", path) from e


def emit_report(
    results: Sequence[AggregateResult], output_format: str = "csv", path: Optional[str] = None
) -> str:
    """
    Render experiment rows and write them to ``path`` atomically.

    Returns:
        The rendered report, so the caller can print it when there is no path
    """
    text = render_rows([result_row(r) for r in results], REPORT_FIELDS, output_format)
    if path:
        write_atomic(path, text)
        logger.info(f"report with {len(results)} row(s) written to {path}")
    return text


def emit_storage_table(
    rows: List[Dict[str, Any]], output_format: str = "csv", path: Optional[str] = None
) -> str:
    text = render_rows(rows, STORAGE_FIELDS, output_format)
    if path:
        write_atomic(path, text)
        logger.info(f"storage table written to {path}")
    return text
