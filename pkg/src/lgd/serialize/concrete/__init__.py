"""
Built-in report serializers.
"""
from ._csv import LgdDumpCSV
from ._markdown import LgdDumpMarkdown

__all__ = [
    'LgdDumpCSV',
    'LgdDumpMarkdown',
]
