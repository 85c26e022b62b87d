"""Public interface for RC File Support."""
from ._base import LgdRC
from ._factory import lgd_rc_factory
from .concrete import LgdJsonRC, LgdTomlRC

__all__ = [
    'LgdTomlRC',
    'LgdJsonRC',
    'LgdRC',
    'lgd_rc_factory',
]
