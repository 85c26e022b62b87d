"""
One-call helpers around the serializer classes.
"""
from ._config import LgdDumpConfig
from .concrete._csv import LgdDumpCSV
from .concrete._markdown import LgdDumpMarkdown
from ..lgd_report import ReportSummary


def lgd_save_csv(summary: ReportSummary, config: LgdDumpConfig | None = None) -> None:
    LgdDumpCSV(config or LgdDumpConfig.csv_default()).dump(summary)


def lgd_save_md(summary: ReportSummary, config: LgdDumpConfig | None = None) -> None:
    LgdDumpMarkdown(config or LgdDumpConfig.markdown_default()).dump(summary)
