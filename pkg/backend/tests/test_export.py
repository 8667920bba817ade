"""Tests for the CSV / Excel / PDF report writers"""
import pandas as pd
import pytest
from openpyxl import load_workbook

from app.exceptions import UsageError
from app.export import PREDICTION_COLUMNS, SUMMARY_COLUMNS, excel_report, pdf_report, write_report
from app.schemas import PredictionRow, SummaryRow


@pytest.fixture
def rows():
    return [
        PredictionRow(method="EXACT", mspe=1.27, dic=3410.5, p_d=210.2, seconds=12.0),
        PredictionRow(method="MLP eps=200 gamma=20", mspe=None, dic=3412.1, p_d=205.7, seconds=3.5),
    ]


class TestWriteReport:

    def test_all_formats(self, rows, tmp_path):
        paths = write_report(rows, PREDICTION_COLUMNS, "Prediction report", str(tmp_path / "prediction"),
                             ["csv", "xlsx", "pdf"])
        assert [p.rsplit(".", 1)[1] for p in paths] == ["csv", "xlsx", "pdf"]

        frame = pd.read_csv(tmp_path / "prediction.csv")
        assert list(frame.columns) == ["method", "mspe", "dic", "p_d", "seconds"]
        assert frame.loc[0, "mspe"] == pytest.approx(1.27)
        assert pd.isna(frame.loc[1, "mspe"])

        sheet = load_workbook(tmp_path / "prediction.xlsx").active
        assert [c.value for c in sheet[1]] == ["Method", "MSPE", "DIC", "p_D", "Time (s)"]
        assert sheet.cell(row=3, column=1).value == "MLP eps=200 gamma=20"
        assert sheet.cell(row=3, column=2).value is None
        assert sheet.freeze_panes == "A2"

        assert (tmp_path / "prediction.pdf").read_bytes().startswith(b"%PDF")

    def test_unknown_format(self, rows, tmp_path):
        with pytest.raises(UsageError, match="format"):
            write_report(rows, PREDICTION_COLUMNS, "x", str(tmp_path / "r"), ["docx"])

    def test_pdf_with_missing_values(self):
        row = SummaryRow(parameter="lambda", mean=23.5, sd=0.0, q025=23.5, q975=23.5)
        buffer = pdf_report([row], SUMMARY_COLUMNS, "Posterior summary")
        assert buffer.getvalue()[:4] == b"%PDF"

    def test_excel_header_is_bold(self, rows):
        sheet = load_workbook(excel_report(rows, PREDICTION_COLUMNS, "A rather long prediction report title")).active
        assert sheet.title == "A rather long prediction report"
        assert all(cell.font.bold for cell in sheet[1])
        assert sheet.cell(row=2, column=3).value == pytest.approx(3410.5)
