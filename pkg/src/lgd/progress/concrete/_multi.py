"""Adapter class to fan progress out to several handlers."""
from typing import Any

from .._base import LgdProgress
from ...lgd_util import StrOrNone


class LgdMultiProgress(LgdProgress):
    """
    Broadcast messages and results to every progress object in `progress_list`.

        multi = LgdMultiProgress([LgdLogProgress(), MyUiProgress()])
        generate_campaign(table, 300, mission, seed=7, progress=multi)
    """

    def __init__(self, progress_list):
        if not isinstance(progress_list, list):
            progress_list = [progress_list]

        self.progress_list = progress_list

    def __str__(self):
        return f"LgdMultiProgress - Manages Progress for {len(self.progress_list)} Sub-progress Handlers"

    def __repr__(self):
        return f"<LgdMultiProgress(progress_list={len(self.progress_list)} handlers)>"

    def message(self, msg):
        if msg:
            for progress in self.progress_list:
                progress.message(msg)

    def result_msg(self, current_iteration: int, max_iteration: int, msg: StrOrNone = '',
                   result: Any = None):
        for progress in self.progress_list:
            progress.result_msg(current_iteration, max_iteration, msg=msg, result=result)
