"""
Report writers: CSV, Excel and PDF copies of the report tables
"""
import io
import logging
import os
from typing import Iterable, List, NamedTuple, Sequence

import pandas as pd
from openpyxl.styles import Font

from reportlab.lib import colors
from reportlab.lib.pagesizes import A4
from reportlab.lib.styles import getSampleStyleSheet
from reportlab.lib.units import cm
from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from .exceptions import UsageError

logger = logging.getLogger(__name__)


class ReportColumn(NamedTuple):
    field: str
    label: str


APPROX_ERROR_COLUMNS = [
    ReportColumn("method", "Method"),
    ReportColumn("eps", "eps"),
    ReportColumn("gamma", "gamma"),
    ReportColumn("rank", "m"),
    ReportColumn("sparsity", "Sparsity (%)"),
    ReportColumn("frobenius", "Frobenius error"),
    ReportColumn("kl", "KL divergence"),
    ReportColumn("kl_bound", "KL bound"),
    ReportColumn("seconds", "Time (s)"),
]

PREDICTION_COLUMNS = [
    ReportColumn("method", "Method"),
    ReportColumn("mspe", "MSPE"),
    ReportColumn("dic", "DIC"),
    ReportColumn("p_d", "p_D"),
    ReportColumn("seconds", "Time (s)"),
]

SUMMARY_COLUMNS = [
    ReportColumn("parameter", "Parameter"),
    ReportColumn("mean", "Mean"),
    ReportColumn("sd", "SD"),
    ReportColumn("q025", "2.5%"),
    ReportColumn("q975", "97.5%"),
    ReportColumn("inefficiency", "IF"),
    ReportColumn("acceptance", "Acceptance"),
]


def report_frame(rows: Sequence, columns: Sequence[ReportColumn]) -> pd.DataFrame:
    """One row per report row, one column per field; missing values become NaN"""
    return pd.DataFrame([{c.field: getattr(r, c.field, None) for c in columns} for r in rows],
                        columns=[c.field for c in columns])


def _cell(value) -> str:
    if value is None or (isinstance(value, float) and value != value):
        return ""
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def excel_report(rows: Sequence, columns: Sequence[ReportColumn], title: str) -> io.BytesIO:
    frame = report_frame(rows, columns).rename(columns={c.field: c.label for c in columns})
    output = io.BytesIO()
    sheet_name = title[:31]
    with pd.ExcelWriter(output, engine="openpyxl") as writer:
        frame.to_excel(writer, sheet_name=sheet_name, index=False)
        sheet = writer.sheets[sheet_name]
        for cell in sheet[1]:
            cell.font = Font(bold=True)
        for row in sheet.iter_rows(min_row=2):
            for cell in row:
                if isinstance(cell.value, float):
                    cell.number_format = "0.0000"
        sheet.freeze_panes = "A2"
    output.seek(0)
    return output


def pdf_report(rows: Sequence, columns: Sequence[ReportColumn], title: str) -> io.BytesIO:
    output = io.BytesIO()
    doc = SimpleDocTemplate(output, pagesize=A4, leftMargin=1.5 * cm, rightMargin=1.5 * cm)
    styles = getSampleStyleSheet()
    table = Table([[c.label for c in columns]] + [[_cell(getattr(r, c.field, None)) for c in columns] for r in rows],
                  repeatRows=1)
    table.setStyle(TableStyle([
        ("FONTNAME", (0, 0), (-1, 0), "Helvetica-Bold"),
        ("FONTSIZE", (0, 0), (-1, -1), 8),
        ("ALIGN", (1, 1), (-1, -1), "RIGHT"),
        ("LINEBELOW", (0, 0), (-1, 0), 0.75, colors.black),
        ("GRID", (0, 1), (-1, -1), 0.25, colors.grey),
    ]))
    doc.build([Paragraph(title, styles["Heading2"]), Spacer(1, 12), table])
    output.seek(0)
    return output


def write_report(rows: Sequence, columns: List[ReportColumn], title: str, stem: str,
                 formats: Iterable[str] = ("csv",)) -> List[str]:
    """Write rows to stem.csv / stem.xlsx / stem.pdf as requested; returns the paths"""
    rows = list(rows)
    written = []
    for fmt in formats:
        path = f"{stem}.{fmt}"
        if fmt == "csv":
            report_frame(rows, columns).to_csv(path, index=False)
        elif fmt == "xlsx":
            with open(path, "wb") as handle:
                handle.write(excel_report(rows, columns, title).getvalue())
        elif fmt == "pdf":
            with open(path, "wb") as handle:
                handle.write(pdf_report(rows, columns, title).getvalue())
        else:
            raise UsageError(f"unknown report format {fmt!r}")
        written.append(path)
    logger.info("wrote %s", ", ".join(os.path.basename(p) for p in written))
    return written
