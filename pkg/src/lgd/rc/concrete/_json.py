"""
Allow the usage of a JSON file as an RC file.
"""
import json
import pathlib

from .._base import LgdRC
from ...lgd_exception import LgdException


class LgdJsonRC(LgdRC):
    """Run-control loaded from a JSON file, optionally from a nested object."""

    def __init__(self, cfg: str, section: str = ""):
        section_data = self._load_config(cfg, section)
        super().__init__(rc_d=section_data)
        self.cfg = cfg

    def _load_config(self, cfg: str, section: str = "") -> dict:
        cfg_file = pathlib.Path(cfg)
        try:
            with cfg_file.open("rt", encoding="utf8") as j:
                config_data = json.load(j)
        except (FileNotFoundError, json.JSONDecodeError, PermissionError) as error:
            raise LgdException(f"JSON config {cfg} error: {error}") from error

        if not section:
            return config_data
        return self.get_dotted(config_data, section)
