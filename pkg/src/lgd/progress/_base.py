"""Abstract base class for tracking and managing progress."""
from abc import ABC
from typing import Any

from ..lgd_util import StrOrNone


# pylint: disable=R0903
class LgdProgress(ABC):
    """
    Base class for progress reporting from long running stages.

    Log campaigns, validation runs and per-segment searches call `result_msg` once
    per finished item.  `current_iteration` counts from 1 up to `max_iteration`.
    `result` is the item's outcome, for example a verdict label or a best fitness.
    """

    def __str__(self):
        return "LgdProgress base class for tracking progress"

    def __repr__(self):
        return "<LgdProgress>"

    def message(self, msg: str):
        """Report an arbitrary message such as a stage starting or stopping."""

    def result_msg(self, current_iteration: int, max_iteration: int, msg: StrOrNone = '',
                   result: Any = None):
        """Report one finished item."""
