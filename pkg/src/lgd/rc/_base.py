"""
Run-control settings for lgd.  Subclasses load the dictionary from TOML or JSON.
"""
from typing import Any

from ..lgd_exception import LgdException
from ..lgd_settings import (SETTINGS_SECTIONS, CampaignSettings, GuidelineParams, PredictorHyperparams,
                            SearchParams, ValidateSettings, build_settings)


class LgdRC:
    """
    The baseline run-control for lgd is a dictionary with one optional table per
    stage (`campaign`, `predictor`, `search`, `guideline`, `validate`) plus a few
    top level keys (`seed`, `jobs`, `out_dir`, `table`, `mission`).

    Only what the user wants to change needs to be present.  The typed getters merge
    the section over the dataclass defaults and any CLI overrides.
    """

    TOP_LEVEL = ("name", "seed", "jobs", "out_dir", "table", "mission")

    def __init__(self, *, rc_d: dict | None = None):
        rc_d = rc_d or {}

        if not isinstance(rc_d, dict):
            raise LgdException(f"LgdRC expects a dictionary but got '{type(rc_d)}'")

        unknown = set(rc_d) - set(SETTINGS_SECTIONS) - set(self.TOP_LEVEL)
        if unknown:
            raise LgdException(f"unknown rc keys: {sorted(unknown)}")

        self.sections: dict[str, dict] = {}
        for section in SETTINGS_SECTIONS:
            data = rc_d.get(section, {})
            if not isinstance(data, dict):
                raise LgdException(f"rc section '{section}' must be a table, got '{type(data)}'")
            self.sections[section] = dict(data)

        self.name: str = rc_d.get("name", "")
        self.seed: int | None = rc_d.get("seed")
        self.jobs: int | None = rc_d.get("jobs")
        self.out_dir: str | None = rc_d.get("out_dir")
        self.table: str | None = rc_d.get("table")
        self.mission: str | None = rc_d.get("mission")

        # Build once so a bad value fails at load time.
        for section, cls in SETTINGS_SECTIONS.items():
            build_settings(cls, self.sections[section])

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__}(name={self.name!r})>"

    def _load_config(self, cfg: str, section: str) -> dict:  # pragma no cover
        raise NotImplementedError

    @staticmethod
    def get_dotted(config: dict, key: str, sep: str = ".") -> Any:
        """
        Retrieve a nested value using a dotted key such as 'experiments.small'.
        Returns {} when any key along the path is missing.
        """
        value: Any = config
        for k in key.split(sep):
            if not isinstance(value, dict):
                return {}
            value = value.get(k, {})
        return value

    def campaign(self, **overrides) -> CampaignSettings:
        return build_settings(CampaignSettings, self.sections["campaign"], **overrides)

    def predictor(self, **overrides) -> PredictorHyperparams:
        return build_settings(PredictorHyperparams, self.sections["predictor"], **overrides)

    def search(self, **overrides) -> SearchParams:
        return build_settings(SearchParams, self.sections["search"], **overrides)

    def guideline(self, **overrides) -> GuidelineParams:
        return build_settings(GuidelineParams, self.sections["guideline"], **overrides)

    def validate(self, **overrides) -> ValidateSettings:
        return build_settings(ValidateSettings, self.sections["validate"], **overrides)
