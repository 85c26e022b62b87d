"""Configuration shared by the report serializers."""
from dataclasses import dataclass
from typing import List

from ..lgd_exception import LgdValueError
from ..lgd_util import StrOrNone

StrListOrNone = str | List[str] | None


@dataclass
class LgdDumpConfig:
    """
    Output settings for a validation report.

    The summary section holds the campaign totals, the result section one row per
    verdict label.  Columns may be 'all' or a list drawn from the VALID_* lists.

    Attributes:
        show_summary (bool): Write the totals section.
        show_results (bool): Write the per-verdict section.
        summary_columns (StrListOrNone): Totals columns, default 'all'.
        result_columns (StrListOrNone): Per-verdict columns, default 'all'.
        output_file (StrOrNone): Target file, stdout when None.
        summary_title (str): Heading of the totals section (markdown).
        result_title (str): Heading of the per-verdict section (markdown).
        show_examples (bool): Include the example guidelines (markdown).
    """
    show_summary: bool = True
    show_results: bool = True
    summary_columns: StrListOrNone = 'all'
    result_columns: StrListOrNone = 'all'
    output_file: StrOrNone = None
    summary_title: str = "## Summary"
    result_title: str = "## Verdicts"
    show_examples: bool = True

    VALID_SUMMARY_COLUMNS = ["potential", "incorrect", "correct", "tp_ratio", "tackling_runs"]
    VALID_RESULT_COLUMNS = ["verdict", "count", "ratio"]

    @classmethod
    def csv_default(cls, **kwargs):
        """CSV holds the totals followed by the verdict rows."""
        return cls(show_examples=False, **kwargs)

    @classmethod
    def markdown_default(cls, **kwargs):
        return cls(**kwargs)

    def __post_init__(self):
        self._validate_columns(self.summary_columns, self.VALID_SUMMARY_COLUMNS, "summary_columns")
        self._validate_columns(self.result_columns, self.VALID_RESULT_COLUMNS, "result_columns")

    @staticmethod
    def _validate_columns(columns: StrListOrNone, valid_columns: List[str], param_name: str) -> None:
        if columns is None or columns == 'all':
            return
        cols = columns if isinstance(columns, list) else [columns]
        invalid_cols = set(cols) - set(valid_columns)
        if invalid_cols:
            raise LgdValueError(f"Invalid {param_name} specified: {sorted(invalid_cols)}. "
                                f"Valid columns are: {valid_columns}")
