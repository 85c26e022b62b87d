"""Do nothing progress."""
from typing import Any

from .._base import LgdProgress
from ...lgd_util import StrOrNone


# pylint: disable=R0903
class LgdNoProgress(LgdProgress):
    """Progress that ignores everything.  The default for library calls and tests."""

    def __str__(self):
        return "LgdNoProgress - No progress tracking"

    def __repr__(self):
        return "<LgdNoProgress>"

    def message(self, msg: str):
        """ Do Nothing"""

    def result_msg(self, current_iteration: int, max_iteration: int, msg: StrOrNone = '',
                   result: Any = None):
        """ Do Nothing"""
