"""
Markdown serialization of a validation report.
"""
from typing import TextIO

from .._base import LgdDump
from .._config import LgdDumpConfig
from ...lgd_report import ReportSummary


class LgdDumpMarkdown(LgdDump):
    """Markdown tables for the totals, the verdict tally and the example guidelines."""

    def __init__(self, config: LgdDumpConfig | None = None):
        super().__init__(config or LgdDumpConfig.markdown_default())

    @staticmethod
    def _format_header(cols: list[str]) -> str:
        return "| " + " | ".join(c.replace("_", " ").title() for c in cols) + " |"

    @staticmethod
    def _format_alignment_row(cols: list[str]) -> str:
        return "| " + " | ".join("---" for _ in cols) + " |"

    def _table(self, output_file: TextIO, cols: list[str], rows: list[list]) -> None:
        output_file.write(self._format_header(cols) + "\n")
        output_file.write(self._format_alignment_row(cols) + "\n")
        for row in rows:
            output_file.write("| " + " | ".join(self.format_value(v).replace("|", "\\|") for v in row) + " |\n")
        output_file.write("\n")

    def _dump_implementation(self, summary: ReportSummary, output_file: TextIO) -> None:
        output_file.write("# Validation Report\n\n")

        if self.include_summary:
            output_file.write(f"{self.config.summary_title}\n\n")
            self._table(output_file, self.summary_columns,
                        [[self.summary_value(summary, c) for c in self.summary_columns]])

        if self.include_results:
            output_file.write(f"{self.config.result_title}\n\n")
            self._table(output_file, self.result_columns,
                        [[getattr(row, c) for c in self.result_columns] for row in summary.verdicts])

        if self.config.show_examples and summary.examples:
            output_file.write("## Example Guidelines\n\n")
            cols = ["kind", "guideline_id", "f1", "f2"]
            self._table(output_file, cols, [[getattr(ex, c) for c in cols] for ex in summary.examples])
