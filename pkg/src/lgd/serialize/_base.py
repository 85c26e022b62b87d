"""Base class for report serializers."""
import sys
from abc import ABC, abstractmethod
from typing import Any, List, TextIO

from ._config import LgdDumpConfig
from ..lgd_exception import LgdException
from ..lgd_report import ReportSummary


class LgdDump(ABC):
    """
    Writes a ReportSummary in some text format.

    `dump` opens the configured file (stdout when none), hands it to
    `_dump_implementation` and closes it again.
    """

    def __init__(self, config: LgdDumpConfig | None = None):
        self.config = config or LgdDumpConfig()
        self.summary_columns = self._process_columns(self.config.summary_columns,
                                                     LgdDumpConfig.VALID_SUMMARY_COLUMNS)
        self.result_columns = self._process_columns(self.config.result_columns,
                                                    LgdDumpConfig.VALID_RESULT_COLUMNS)
        self.include_summary = bool(self.config.show_summary and self.summary_columns)
        self.include_results = bool(self.config.show_results and self.result_columns)

    @staticmethod
    def _process_columns(columns, valid: List[str]) -> List[str]:
        if not columns or columns == 'all':
            return valid.copy()
        return columns if isinstance(columns, list) else [columns]

    @staticmethod
    def summary_value(summary: ReportSummary, col: str) -> Any:
        return getattr(summary, col)

    @staticmethod
    def format_value(val: Any) -> str:
        """Ratios print with six decimals so reports are stable text."""
        if isinstance(val, float):
            return f"{val:.6f}"
        return str(val)

    def get_output_file(self, encoding="utf8") -> TextIO:
        filename = self.config.output_file
        if filename:
            return open(filename, "w", newline="", encoding=encoding)
        return sys.stdout

    def dump(self, summary: ReportSummary) -> None:
        """
        Write the summary.

        Raises:
            LgdException: If serialization fails.
        """
        output_file = self.get_output_file()
        try:
            self._dump_implementation(summary, output_file)
        except Exception as e:
            raise LgdException(f"Error serializing report: {e}") from e
        finally:
            if self.config.output_file and output_file is not sys.stdout:
                output_file.close()

    @abstractmethod
    def _dump_implementation(self, summary: ReportSummary, output_file: TextIO) -> None:
        """Format specific writing."""
