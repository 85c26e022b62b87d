"""
Build an LgdRC from a dictionary or from a TOML/JSON file path.
"""
import pathlib

from ._base import LgdRC
from .concrete._json import LgdJsonRC
from .concrete._toml import LgdTomlRC
from ..lgd_exception import LgdException


def lgd_rc_factory(param: dict | str | pathlib.Path | None, section: str = "") -> LgdRC:
    """
    Create the run-control object matching `param`.

    Args:
        param: a settings dictionary, a path ending in `.toml` or `.json`, or None
            for an all-defaults rc.
        section: dotted key of the table to use; empty means the whole document.

    Raises:
        LgdException: for unsupported types or file extensions.
    """
    if isinstance(param, pathlib.Path):
        param = str(param)
    match param:
        case None:
            return LgdRC()
        case dict(d):
            return LgdRC(rc_d=LgdRC.get_dotted(d, section) if section else d)
        case str(s) if s.endswith('.toml'):
            return LgdTomlRC(cfg=s, section=section)
        case str(s) if s.endswith('.json'):
            return LgdJsonRC(cfg=s, section=section)
        case _:
            raise LgdException(f'Invalid parameter for lgd_rc_factory {param=}-{section=}.')
