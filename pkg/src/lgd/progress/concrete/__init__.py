from ._log import LgdLogProgress
from ._multi import LgdMultiProgress
from ._no import LgdNoProgress

__all__ = [
    "LgdNoProgress",
    "LgdMultiProgress",
    "LgdLogProgress",
]
