import logging
from typing import Any

from .._base import LgdProgress
from ...lgd_exception import LgdException
from ...lgd_logging import lgd_logger
from ...lgd_util import IntOrNone, StrOrNone


# pylint: disable=R0903
class LgdLogProgress(LgdProgress):
    """
    Send progress to the lgd logger.

    Messages and per-item results have independent log levels.  Setting either
    level to None disables that kind of output.
    """

    def __init__(self,
                 logger: logging.Logger = lgd_logger,
                 result_level: IntOrNone = logging.DEBUG,
                 msg_level: IntOrNone = logging.INFO):

        if result_level is not None and not self._is_valid_log_level(result_level):
            raise LgdException(f"Invalid logging level provided for result_level: {result_level}")

        if msg_level is not None and not self._is_valid_log_level(msg_level):
            raise LgdException(f"Invalid logging level provided for msg_level: {msg_level}")

        if not isinstance(logger, logging.Logger):
            raise LgdException("Invalid logger type passed to LgdLogProgress.")

        self.logger: logging.Logger = logger
        self.result_level = result_level
        self.msg_level = msg_level

    def __str__(self):
        return (
            f"LgdLogProgress - Logs progress to logger '{self.logger.name}'"
            f" with result_level={self.result_level} and msg_level={self.msg_level}"
        )

    def __repr__(self):
        return (
            f"<LgdLogProgress(logger={self.logger.name}, "
            f"result_level={self.result_level}, msg_level={self.msg_level})>"
        )

    def message(self, msg: str):
        if msg and self.msg_level is not None:
            self.logger.log(self.msg_level, msg)

    def result_msg(self, current_iteration: int, max_iteration: int, msg: StrOrNone = "",
                   result: Any = None):
        if self.result_level is None:
            return
        msg_str = f" {msg}" if msg else ""
        result_str = f" - {self._format_result(result)}" if result is not None else ""
        self.logger.log(self.result_level, "[%d/%d]%s%s", current_iteration, max_iteration, msg_str, result_str)

    @staticmethod
    def _format_result(result: Any) -> str:
        if isinstance(result, float):
            return f"{result:.6g}"
        return str(getattr(result, "value", result))

    @staticmethod
    def _is_valid_log_level(level):
        return level in (
            logging.DEBUG,
            logging.INFO,
            logging.WARNING,
            logging.ERROR,
            logging.CRITICAL,
        )
