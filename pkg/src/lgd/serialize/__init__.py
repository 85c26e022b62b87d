""" Report serializers exposed at the package level """
from .concrete import LgdDumpCSV, LgdDumpMarkdown
from ._base import LgdDump
from ._config import LgdDumpConfig
from ._legacy import lgd_save_csv, lgd_save_md

__all__ = [
    'LgdDumpConfig',
    'LgdDump',
    'LgdDumpCSV',
    'LgdDumpMarkdown',
    'lgd_save_csv',
    'lgd_save_md',
]
