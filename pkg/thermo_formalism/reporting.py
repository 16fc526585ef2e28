from __future__ import annotations

import io
import json
import math
from typing import Any, Iterable

import numpy as np
import pandas as pd

from thermo_formalism.models import CommandOutcome, JobConfig

REPORT_SECTIONS = ("inputs", "values", "diagnostics", "timing")
CSV_COLUMNS = ["section", "key", "index", "value"]


def _plain(value: Any) -> Any:
    """numpy scalars and arrays to Python objects."""
    if isinstance(value, np.ndarray):
        return [_plain(item) for item in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    return value


def build_report(
    config: JobConfig,
    outcome: CommandOutcome | None,
    status: str,
    elapsed_sec: float | None = None,
    error: str | None = None,
) -> dict:
    report: dict[str, Any] = {
        "command": config.command,
        "seed": config.seed,
        "status": status,
        "inputs": {"system": _plain(config.system), "parameters": _plain(config.parameters)},
        "values": _plain(outcome.values) if outcome else {},
        "diagnostics": _plain(outcome.diagnostics) if outcome else {},
    }
    if error:
        report["error"] = error
    if elapsed_sec is not None:
        report["timing"] = {"wall_clock_sec": elapsed_sec}
    return report


def _extended(value: Any) -> Any:
    """IEEE infinities and NaN as strings, everything else unchanged."""
    if isinstance(value, float) and not math.isfinite(value):
        if math.isnan(value):
            return "nan"
        return "inf" if value > 0 else "-inf"
    if isinstance(value, dict):
        return {key: _extended(item) for key, item in value.items()}
    if isinstance(value, list):
        return [_extended(item) for item in value]
    return value


def report_to_json(report: dict) -> str:
    return json.dumps(_extended(report), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _flatten(section: str, key: str, value: Any) -> Iterable[tuple[str, str, str, Any]]:
    if isinstance(value, dict):
        for sub_key, item in value.items():
            yield from _flatten(section, f"{key}.{sub_key}" if key else sub_key, item)
    elif isinstance(value, list) and value and all(isinstance(item, dict) for item in value):
        for i, item in enumerate(value):
            for sub_key, sub_value in item.items():
                for _, flat_key, index, flat_value in _flatten(section, f"{key}.{sub_key}", sub_value):
                    yield section, flat_key, f"{i},{index}" if index else str(i), flat_value
    elif isinstance(value, list):
        for i, item in enumerate(value):
            for _, flat_key, index, flat_value in _flatten(section, key, item):
                yield section, flat_key, f"{i},{index}" if index else str(i), flat_value
    else:
        yield section, key, "", value


def build_report_rows(report: dict) -> pd.DataFrame:
    """Long format: one row per scalar, matrices indexed as 'i,j'."""
    rows = [("report", "command", "", report["command"]), ("report", "seed", "", report["seed"])]
    rows.append(("report", "status", "", report["status"]))
    if "error" in report:
        rows.append(("report", "error", "", report["error"]))
    for section in REPORT_SECTIONS:
        if section in report:
            rows.extend(_flatten(section, "", report[section]))
    return pd.DataFrame(rows, columns=CSV_COLUMNS, dtype=object)


def report_to_csv(report: dict) -> str:
    buffer = io.StringIO()
    build_report_rows(report).to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()
