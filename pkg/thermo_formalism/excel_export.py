from __future__ import annotations

import math
from io import BytesIO

import pandas as pd
from openpyxl import Workbook
from openpyxl.styles import Font
from openpyxl.utils import get_column_letter

from thermo_formalism.reporting import build_report_rows


def _auto_width(ws) -> None:
    for column_cells in ws.columns:
        max_len = 0
        col_idx = column_cells[0].column
        for cell in column_cells:
            value = "" if cell.value is None else str(cell.value)
            max_len = max(max_len, len(value))
        ws.column_dimensions[get_column_letter(col_idx)].width = min(max_len + 2, 40)


def _cell_value(value):
    # xlsx has no infinities
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def _append_rows(ws, df: pd.DataFrame) -> None:
    ws.append(list(df.columns))
    for cell in ws[1]:
        cell.font = Font(bold=True)
    for row in df.itertuples(index=False, name=None):
        ws.append([_cell_value(value) for value in row])
    _auto_width(ws)


def _build_summary_sheet(wb: Workbook, rows: pd.DataFrame) -> None:
    ws = wb.create_sheet("Summary")
    summary = rows[rows["section"] == "report"][["key", "value"]]
    _append_rows(ws, summary)


def _build_section_sheet(wb: Workbook, rows: pd.DataFrame, section: str) -> None:
    ws = wb.create_sheet(section.capitalize())
    part = rows[rows["section"] == section][["key", "index", "value"]]
    if part.empty:
        ws.append(["No data"])
        return
    _append_rows(ws, part)


def build_excel_report(report: dict) -> bytes:
    rows = build_report_rows(report)
    wb = Workbook()
    wb.remove(wb.active)

    _build_summary_sheet(wb, rows)
    for section in ("values", "diagnostics", "inputs"):
        _build_section_sheet(wb, rows, section)

    stream = BytesIO()
    wb.save(stream)
    return stream.getvalue()
