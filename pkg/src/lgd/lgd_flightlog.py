"""
Flight log campaigns, the on-disk LogSet format and context segmentation.

A LogSet directory holds

    manifest.json       {format_version, param_names, flights: [{id, config, verdict, n_entries}], ...}
    flight_<id>.csv     t,roll,pitch,yaw,roll_rate,pitch_rate,yaw_rate,gx,gy,gz,ax,ay,az

Only flights that classify as Correct are kept, so every flight in a LogSet is
stable flight data.
"""
import json
import pathlib
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
import pandas as pd

from .lgd_exception import CampaignFailedError, LgdValueError, LogFormatError
from .lgd_logging import lgd_logger
from .lgd_mission import Mission
from .lgd_monitor import Label, PrearmResult, classify, load_prearm_rules, prearm_check
from .lgd_paramspec import Configuration, ParameterTable, default_configuration
from .lgd_runner import LgdMissionPool, MissionJob, fly
from .lgd_settings import CampaignSettings
from .lgd_simkernel import SENSOR_COLUMNS, STATE_COLUMNS, SensorUnit, StateUnit
from .lgd_util import FLOAT_FORMAT, STREAM_CAMPAIGN, STREAM_TRAIN, StrOrPath, derive_seed, rng_stream, write_json
from .progress import LgdNoProgress, LgdProgress

LOG_FORMAT_VERSION = 1
LOG_COLUMNS = ["t", *STATE_COLUMNS, *SENSOR_COLUMNS]
CONTEXT_WIDTH = len(STATE_COLUMNS) + len(SENSOR_COLUMNS)


@dataclass(frozen=True, slots=True)
class LogEntry:
    timestamp: float
    state: StateUnit
    sensors: SensorUnit
    config_id: int


@dataclass(frozen=True, slots=True)
class Context:
    state: StateUnit
    sensors: SensorUnit

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.state.as_array(), self.sensors.as_array()])

    @classmethod
    def from_array(cls, values) -> "Context":
        values = np.asarray(values, dtype=float)
        return cls(StateUnit.from_array(values[:6]), SensorUnit.from_array(values[6:12]))


@dataclass(eq=False)
class FlightLog:
    """One retained flight.  `contexts` has a row per entry: 6 state columns then 6 sensor columns."""
    flight_id: int
    config: Configuration
    times: np.ndarray
    contexts: np.ndarray
    verdict: str = Label.CORRECT.value

    def __len__(self) -> int:
        return len(self.times)

    def __eq__(self, other) -> bool:
        return (isinstance(other, FlightLog) and self.flight_id == other.flight_id
                and self.config == other.config and self.verdict == other.verdict
                and np.array_equal(self.times, other.times) and np.array_equal(self.contexts, other.contexts))

    def entries(self) -> Iterator[LogEntry]:
        for t, row in zip(self.times, self.contexts):
            yield LogEntry(timestamp=float(t), state=StateUnit.from_array(row[:6]),
                           sensors=SensorUnit.from_array(row[6:]), config_id=self.flight_id)

    def frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.contexts, columns=LOG_COLUMNS[1:])
        frame.insert(0, "t", self.times)
        return frame


@dataclass(eq=False)
class LogSet:
    param_names: list[str]
    flights: list[FlightLog] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.flights)

    def __iter__(self) -> Iterator[FlightLog]:
        return iter(self.flights)

    def __eq__(self, other) -> bool:
        return (isinstance(other, LogSet) and self.param_names == other.param_names
                and self.flights == other.flights)

    @property
    def total_entries(self) -> int:
        return sum(len(f) for f in self.flights)

    @property
    def config_manifest(self) -> dict[int, Configuration]:
        return {f.flight_id: f.config for f in self.flights}

    def flight(self, flight_id: int) -> FlightLog:
        for f in self.flights:
            if f.flight_id == flight_id:
                return f
        raise KeyError(flight_id)


@dataclass(frozen=True)
class Segment:
    """h+1 consecutive contexts cut from one flight."""
    contexts: np.ndarray
    flight_id: int
    start: int

    def __len__(self) -> int:
        return len(self.contexts)

    @property
    def h(self) -> int:
        return len(self.contexts) - 1

    def context(self, i: int) -> Context:
        return Context.from_array(self.contexts[i])


def sample_campaign_configuration(table: ParameterTable, rng: np.random.Generator,
                                  sigma_fraction: float = 0.15) -> Configuration:
    """Per parameter Gaussian around the default with sigma a fraction of the range width, clipped to range."""
    if not sigma_fraction > 0:
        raise LgdValueError(f"sigma_fraction must be positive, got {sigma_fraction}")
    values = rng.normal(table.default, sigma_fraction * table.width)
    return Configuration.from_array(np.clip(values, table.lower, table.upper))


def _campaign_flight(job: MissionJob) -> tuple[str, np.ndarray, np.ndarray]:
    trace = fly(job)
    verdict = classify(trace, PrearmResult(), injected=False)
    contexts = np.hstack([trace.state, trace.sensors])
    return verdict.label.value, trace.times, contexts


def generate_campaign(table: ParameterTable,
                      n_flights: int,
                      mission: Mission,
                      seed: int,
                      settings: CampaignSettings | None = None,
                      jobs: int = 1,
                      progress: LgdProgress | None = None) -> LogSet:
    """
    Fly `n_flights` missions and keep the stable ones.

    Flight 0 always uses the default configuration; the others are drawn with
    sample_campaign_configuration.  Configurations that fail the pre-arm check are
    discarded without flying since the vehicle would refuse to arm.

    Raises:
        CampaignFailedError: fewer than `min_stable_fraction` of the flights were kept.
    """
    if n_flights < 1:
        raise LgdValueError(f"n_flights must be at least 1, got {n_flights}")
    settings = settings or CampaignSettings(n_flights=n_flights)
    progress = progress or LgdNoProgress()
    rules = load_prearm_rules()

    mission_jobs = []
    discarded: dict[str, int] = {}
    for i in range(n_flights):
        if i == 0:
            config = default_configuration(table)
        else:
            config = sample_campaign_configuration(table, rng_stream(seed, STREAM_CAMPAIGN, i),
                                                   settings.sigma_fraction)
        if not prearm_check(config, table, rules).accepted:
            discarded["PrearmRejected"] = discarded.get("PrearmRejected", 0) + 1
            continue
        mission_jobs.append(MissionJob(index=i, config=config, mission=mission,
                                       seed=derive_seed(seed, STREAM_CAMPAIGN, i), table=table,
                                       dt=settings.dt, duration_cap=settings.duration_cap))

    progress.message(f"Flying {len(mission_jobs)} campaign missions")
    results = LgdMissionPool(jobs=jobs, progress=progress).run(mission_jobs, task=_campaign_flight,
                                                                label="flight", describe=lambda r: r[0])

    flights = []
    for job, (label, times, contexts) in zip(mission_jobs, results):
        if label != Label.CORRECT.value:
            discarded[label] = discarded.get(label, 0) + 1
            lgd_logger.debug("Discarding flight %d: %s", job.index, label)
            continue
        flights.append(FlightLog(flight_id=job.index, config=job.config, times=times, contexts=contexts))

    retained = len(flights)
    if retained < settings.min_stable_fraction * n_flights:
        lgd_logger.warning("Campaign kept %d of %d flights, discarded %s", retained, n_flights, discarded)
        raise CampaignFailedError(retained=retained, total=n_flights)

    logset = LogSet(param_names=list(table.names), flights=flights,
                    metadata={"seed": int(seed), "n_attempted": int(n_flights),
                              "discarded": dict(sorted(discarded.items()))})
    lgd_logger.info("Campaign kept %d of %d flights (%d entries)", retained, n_flights, logset.total_entries)
    return logset


def write_log(logset: LogSet, path: StrOrPath) -> None:
    """Write `logset` as a LogSet directory at `path` (created if needed)."""
    directory = pathlib.Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    for flight in logset.flights:
        flight.frame().to_csv(directory / f"flight_{flight.flight_id}.csv", index=False,
                              float_format=FLOAT_FORMAT, lineterminator="\n")
    manifest = {
        "format_version": LOG_FORMAT_VERSION,
        "param_names": list(logset.param_names),
        "total_entries": logset.total_entries,
        "flights": [{"id": f.flight_id, "config": list(f.config.values), "verdict": f.verdict,
                     "n_entries": len(f)} for f in logset.flights],
        "metadata": logset.metadata,
    }
    write_json(directory / "manifest.json", manifest)


def read_log(path: StrOrPath) -> LogSet:
    """
    Read a LogSet directory.

    Raises:
        LogFormatError: missing or unreadable manifest, wrong format version, a flight
            file with the wrong columns, or fewer rows than the manifest records.
    """
    directory = pathlib.Path(path)
    manifest_file = directory / "manifest.json"
    try:
        manifest = json.loads(manifest_file.read_text(encoding="utf-8"))
    except FileNotFoundError as error:
        raise LogFormatError(f"no LogSet manifest at {manifest_file}") from error
    except (json.JSONDecodeError, UnicodeDecodeError) as error:
        raise LogFormatError(f"corrupt LogSet manifest {manifest_file}: {error}") from error

    if not isinstance(manifest, dict) or manifest.get("format_version") != LOG_FORMAT_VERSION:
        found = manifest.get("format_version") if isinstance(manifest, dict) else None
        raise LogFormatError(f"LogSet format version {found!r}, expected {LOG_FORMAT_VERSION}")

    flights = []
    for record in manifest.get("flights", []):
        flight_file = directory / f"flight_{record['id']}.csv"
        try:
            frame = pd.read_csv(flight_file, dtype=float, float_precision="round_trip")
        except (FileNotFoundError, pd.errors.EmptyDataError, pd.errors.ParserError, ValueError) as error:
            raise LogFormatError(f"cannot read {flight_file}: {error}") from error
        if list(frame.columns) != LOG_COLUMNS:
            raise LogFormatError(f"{flight_file} has columns {list(frame.columns)}")
        if len(frame) != record["n_entries"]:
            raise LogFormatError(f"{flight_file} is truncated: {len(frame)} of {record['n_entries']} rows")
        flights.append(FlightLog(flight_id=int(record["id"]),
                                 config=Configuration(tuple(float(v) for v in record["config"])),
                                 times=frame["t"].to_numpy(dtype=float),
                                 contexts=frame[LOG_COLUMNS[1:]].to_numpy(dtype=float),
                                 verdict=record.get("verdict", Label.CORRECT.value)))
    return LogSet(param_names=list(manifest.get("param_names", [])), flights=flights,
                  metadata=manifest.get("metadata", {}))


def segment(logset: LogSet, h: int) -> list[Segment]:
    """
    Non-overlapping windows of h+1 entries starting at indices divisible by h+1.
    Entries after the last full window of a flight are dropped.
    """
    if h < 1:
        raise LgdValueError(f"h must be at least 1, got {h}")
    width = h + 1
    segments = []
    for flight in logset.flights:
        for start in range(0, len(flight) - width + 1, width):
            segments.append(Segment(contexts=flight.contexts[start:start + width], flight_id=flight.flight_id,
                                    start=start))
    return segments


def split_flights(logset: LogSet, fraction: float, seed: int) -> tuple[LogSet, LogSet]:
    """
    Split by whole flights into (train, holdout).  The holdout takes round(fraction * n)
    flights, at least one when there are two or more flights and never all of them.
    """
    if not 0.0 <= fraction < 1.0:
        raise LgdValueError(f"fraction must be in [0, 1), got {fraction}")
    n = len(logset)
    n_hold = 0 if n < 2 or fraction == 0.0 else min(n - 1, max(1, int(round(fraction * n))))
    order = rng_stream(seed, STREAM_TRAIN, 0).permutation(n)
    hold = set(int(i) for i in order[:n_hold])
    train = [f for i, f in enumerate(logset.flights) if i not in hold]
    holdout = [f for i, f in enumerate(logset.flights) if i in hold]
    return (LogSet(param_names=logset.param_names, flights=train, metadata=logset.metadata),
            LogSet(param_names=logset.param_names, flights=holdout, metadata=logset.metadata))
