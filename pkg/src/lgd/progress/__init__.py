"""Public interface for Progress Support."""

from ._base import LgdProgress
from .concrete._log import LgdLogProgress
from .concrete._multi import LgdMultiProgress
from .concrete._no import LgdNoProgress

__all__ = [
    "LgdNoProgress",
    "LgdMultiProgress",
    "LgdLogProgress",
    "LgdProgress",
]
