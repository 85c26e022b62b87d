"""
CSV serialization of a validation report.
"""
import csv
from typing import TextIO

from .._base import LgdDump
from .._config import LgdDumpConfig
from ...lgd_report import ReportSummary


class LgdDumpCSV(LgdDump):
    """
    Writes long-format rows `section,key,value`: the totals under `summary` then one
    row per verdict and column under the verdict name.
    """

    def __init__(self, config: LgdDumpConfig | None = None):
        super().__init__(config or LgdDumpConfig.csv_default())

    def _dump_implementation(self, summary: ReportSummary, output_file: TextIO) -> None:
        writer = csv.writer(output_file, lineterminator="\n")
        writer.writerow(["section", "key", "value"])

        if self.include_summary:
            for col in self.summary_columns:
                writer.writerow(["summary", col, self.format_value(self.summary_value(summary, col))])

        if self.include_results:
            for row in summary.verdicts:
                for col in self.result_columns:
                    if col == "verdict":
                        continue
                    writer.writerow([row.verdict, col, self.format_value(getattr(row, col))])
