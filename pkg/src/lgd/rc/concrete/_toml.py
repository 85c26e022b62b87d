"""
Allow the usage of a TOML file as an RC file.
"""

import pathlib

import toml

from .._base import LgdRC
from ...lgd_exception import LgdException


class LgdTomlRC(LgdRC):
    """
    Run-control loaded from a TOML file, optionally from a nested table.

    Attributes:
        cfg (str): Path to the TOML configuration file.
    """

    def __init__(self, cfg: str, section: str = ""):
        section_data = self._load_config(cfg, section)
        super().__init__(rc_d=section_data)
        self.cfg = cfg

    def _load_config(self, cfg: str, section: str = "") -> dict:
        """
        Load `cfg` and return the table at the dotted key `section`, or the whole
        document when `section` is empty.

        Raises:
            LgdException: If the file cannot be read or is not valid TOML.
        """
        cfg_file = pathlib.Path(cfg)
        try:
            with cfg_file.open("rt", encoding="utf-8") as file:
                config_data = toml.load(file)
        except (FileNotFoundError, toml.TomlDecodeError, PermissionError) as error:
            raise LgdException(f"TOML config file {cfg} error: {error}") from error

        if not section:
            return config_data
        return self.get_dotted(config_data, section)
