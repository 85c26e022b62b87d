"""
Typed settings for each pipeline stage.

Every field has the desk-scale default.  rc files and CLI flags only ever
override these values; the classes validate themselves so a bad rc file fails
when it is loaded rather than half way through a campaign.
"""
from dataclasses import asdict, dataclass, fields
from typing import Any

from .lgd_exception import LgdException, LgdValueError
from .lgd_simkernel import DEFAULT_DT, DEFAULT_DURATION_CAP


def _check(condition: bool, msg: str) -> None:
    if not condition:
        raise LgdValueError(msg)


def _param_names(value) -> tuple[str, ...] | None:
    """rc lists and comma separated CLI strings both become a tuple of names."""
    if value is None:
        return None
    names = value.split(",") if isinstance(value, str) else list(value)
    names = tuple(str(n).strip() for n in names if str(n).strip())
    _check(len(names) > 0, "params must name at least one parameter")
    _check(len(set(names)) == len(names), f"params repeats a name: {list(names)}")
    return names


@dataclass(frozen=True)
class CampaignSettings:
    n_flights: int = 300
    sigma_fraction: float = 0.15
    min_stable_fraction: float = 0.10
    dt: float = DEFAULT_DT
    duration_cap: float = DEFAULT_DURATION_CAP

    def __post_init__(self):
        _check(self.n_flights >= 1, f"n_flights must be at least 1, got {self.n_flights}")
        _check(self.sigma_fraction > 0, f"sigma_fraction must be positive, got {self.sigma_fraction}")
        _check(0 <= self.min_stable_fraction <= 1, "min_stable_fraction must be in [0, 1]")


@dataclass(frozen=True)
class PredictorHyperparams:
    """
    Training settings for the state-change predictor.

    `threshold_split` picks the windows the deviation threshold is calibrated on:
    `train` (the training flights) or `val` (the held-out stable flights).
    """
    h: int = 4
    hidden_size: int = 64
    epochs: int = 50
    learning_rate: float = 1e-3
    batch_size: int = 64
    validation_fraction: float = 0.2
    patience: int = 5
    max_windows: int = 50_000
    threshold_split: str = "train"

    def __post_init__(self):
        _check(self.h >= 1, f"h must be at least 1, got {self.h}")
        _check(self.hidden_size >= 1, f"hidden_size must be at least 1, got {self.hidden_size}")
        _check(self.epochs >= 1, f"epochs must be at least 1, got {self.epochs}")
        _check(self.learning_rate > 0, f"learning_rate must be positive, got {self.learning_rate}")
        _check(self.batch_size >= 1, f"batch_size must be at least 1, got {self.batch_size}")
        _check(0 < self.validation_fraction <= 0.5,
               f"validation_fraction must be in (0, 0.5], got {self.validation_fraction}")
        _check(self.patience >= 1, f"patience must be at least 1, got {self.patience}")
        _check(self.max_windows >= 1, f"max_windows must be at least 1, got {self.max_windows}")
        _check(self.threshold_split in ("train", "val"),
               f"threshold_split must be 'train' or 'val', got {self.threshold_split!r}")


@dataclass(frozen=True)
class SearchParams:
    """
    Evolutionary search settings.  `pop_size` is NP, `scale` is F and
    `crossover_rate` is CR.  `bandwidth=None` derives the clustering bandwidth from
    the data.  Mean shift is fitted on at most `cluster_sample` segments and every
    segment is then assigned to its nearest mode.
    `params` restricts the search to those parameters; the rest stay at their defaults.
    """
    pop_size: int = 200
    scale: float = 0.4
    crossover_rate: float = 0.9
    g_max: int = 200
    stagnation_eps: float = 0.1
    stagnation_window: int = 10
    top_k: int = 10
    m: int = 3
    jitter: float = 0.05
    bandwidth: float | None = None
    cluster_sample: int = 2000
    threshold_filter: bool = False
    params: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "params", _param_names(self.params))
        _check(self.pop_size >= 4, f"pop_size must be at least 4, got {self.pop_size}")
        _check(0 < self.scale <= 2, f"scale must be in (0, 2], got {self.scale}")
        _check(0 <= self.crossover_rate <= 1, f"crossover_rate must be in [0, 1], got {self.crossover_rate}")
        _check(self.g_max >= 1, f"g_max must be at least 1, got {self.g_max}")
        _check(self.stagnation_window >= 1, "stagnation_window must be at least 1")
        _check(1 <= self.top_k <= self.pop_size, f"top_k must be in [1, pop_size], got {self.top_k}")
        _check(self.m >= 1, f"m must be at least 1, got {self.m}")
        _check(0 <= self.jitter <= 1, f"jitter must be in [0, 1], got {self.jitter}")
        _check(self.bandwidth is None or self.bandwidth > 0, f"bandwidth must be positive, got {self.bandwidth}")
        _check(self.cluster_sample >= 1, f"cluster_sample must be at least 1, got {self.cluster_sample}")


@dataclass(frozen=True)
class GuidelineParams:
    pop_size: int = 100
    generations: int = 200
    crossover_prob: float = 0.9
    crossover_eta: float = 15.0
    mutation_eta: float = 20.0
    mutation_prob: float | None = None
    grid_points: int | None = None
    params: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "params", _param_names(self.params))
        _check(self.pop_size >= 2, f"pop_size must be at least 2, got {self.pop_size}")
        _check(self.generations >= 1, f"generations must be at least 1, got {self.generations}")
        _check(0 <= self.crossover_prob <= 1, "crossover_prob must be in [0, 1]")
        _check(self.crossover_eta >= 0 and self.mutation_eta >= 0, "distribution indexes must be >= 0")
        _check(self.mutation_prob is None or 0 <= self.mutation_prob <= 1, "mutation_prob must be in [0, 1]")
        _check(self.grid_points is None or self.grid_points >= 2, "grid_points must be at least 2")


@dataclass(frozen=True)
class ValidateSettings:
    """`injection_time` is seconds after launch for the mid-flight injection run."""
    injection_time: float = 20.0
    dt: float = DEFAULT_DT
    duration_cap: float = DEFAULT_DURATION_CAP

    def __post_init__(self):
        _check(self.injection_time > 0, f"injection_time must be positive, got {self.injection_time}")
        _check(self.duration_cap > self.injection_time, "duration_cap must exceed injection_time")


SETTINGS_SECTIONS = {
    "campaign": CampaignSettings,
    "predictor": PredictorHyperparams,
    "search": SearchParams,
    "guideline": GuidelineParams,
    "validate": ValidateSettings,
}


def build_settings(cls, values: dict[str, Any] | None = None, **overrides: Any):
    """
    Build a settings dataclass from rc `values` then keyword `overrides`.
    Overrides that are None are skipped so unset CLI flags fall through to the rc
    file and then to the defaults.
    """
    known = {f.name for f in fields(cls)}
    merged: dict[str, Any] = {}
    for source in (values or {}), {k: v for k, v in overrides.items() if v is not None}:
        unknown = set(source) - known
        if unknown:
            raise LgdException(f"unknown {cls.__name__} keys: {sorted(unknown)}")
        merged.update(source)
    return cls(**merged)


def settings_dict(settings) -> dict[str, Any]:
    return asdict(settings)
