"""
Flight-trace detectors for the unstable flight states, the pre-arm parameter check
and the verdict classifier.

Every detector is a pure function of a FlightTrace and returns an Evidence record
when it fires, otherwise None.
"""
import csv
import math
import pathlib
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .lgd_exception import ParamTableError
from .lgd_paramspec import Configuration, ParameterTable
from .lgd_simkernel import FlightTrace, Phase
from .lgd_util import StrOrPath, data_path

FREEZE_WINDOW_S = 15.0
FREEZE_DISTANCE_M = 0.5
DEVIATION_SAMPLE_HZ = 1.0
DEVIATION_LIMIT_M = 1.5
DEVIATION_COUNT = 15
CRASH_DESCENT_MPS = 2.0
CRASH_ATTITUDE_DEG = 90.0
CRASH_ATTITUDE_ALT_M = 1.0
THRUST_LOSS_S = 2.0


class Label(str, Enum):
    CORRECT = "Correct"
    FREEZE = "Freeze"
    DEVIATION = "Deviation"
    CRASH = "Crash"
    THRUST_LOSS = "ThrustLoss"
    TACKLING = "Tackling"

    @property
    def incorrect(self) -> bool:
        return self is not Label.CORRECT


@dataclass(frozen=True, slots=True)
class Evidence:
    """What fired: the time window, the measured value and the threshold it crossed."""
    start: float
    end: float
    measured: float
    threshold: float
    tag: str = ""


@dataclass(frozen=True, slots=True)
class Verdict:
    label: Label
    evidence: Evidence | None = None
    detectors: tuple[str, ...] = ()

    def __post_init__(self):
        if self.label is not Label.CORRECT and self.evidence is None:
            raise ValueError(f"verdict {self.label.value} needs evidence")

    @property
    def incorrect(self) -> bool:
        return self.label.incorrect


@dataclass(frozen=True, slots=True)
class PrearmRule:
    parameter: str
    min: float | None
    max: float | None
    rule_id: str

    def violated(self, value: float) -> bool:
        return (self.min is not None and value < self.min) or (self.max is not None and value > self.max)


@dataclass(frozen=True, slots=True)
class PrearmResult:
    reasons: tuple[tuple[str, str], ...] = field(default_factory=tuple)

    @property
    def accepted(self) -> bool:
        return not self.reasons


def _optional_float(text: str, row: int) -> float | None:
    text = text.strip()
    if not text:
        return None
    try:
        return float(text)
    except ValueError as error:
        raise ParamTableError(f"cannot parse bound '{text}'", row=row) from error


def load_prearm_rules(path: StrOrPath | None = None) -> list[PrearmRule]:
    """Rule CSV `parameter,min,max,rule_id`; an empty bound means unbounded on that side."""
    path = pathlib.Path(path) if path else data_path("prearm_rules.csv")
    try:
        with path.open("rt", encoding="utf-8") as f:
            reader = csv.reader(f)
            header = [h.strip() for h in next(reader, [])]
            if header != ["parameter", "min", "max", "rule_id"]:
                raise ParamTableError("expected header parameter,min,max,rule_id", row=0)
            rules = []
            for row, fields in enumerate(reader, start=1):
                if not fields:
                    continue
                if len(fields) != 4:
                    raise ParamTableError(f"expected 4 fields, got {len(fields)}", row=row)
                rules.append(PrearmRule(parameter=fields[0].strip(), min=_optional_float(fields[1], row),
                                        max=_optional_float(fields[2], row), rule_id=fields[3].strip()))
    except OSError as error:
        raise ParamTableError(f"cannot read pre-arm rules {path}: {error}") from error
    return rules


def prearm_check(config: Configuration, table: ParameterTable,
                 rules: list[PrearmRule] | None = None) -> PrearmResult:
    """Reject configurations that break any sanity rule.  Rules naming parameters outside `table` are ignored."""
    rules = load_prearm_rules() if rules is None else rules
    values = config.as_dict(table)
    reasons = tuple((rule.parameter, rule.rule_id) for rule in rules
                    if rule.parameter in values and rule.violated(values[rule.parameter]))
    return PrearmResult(reasons=reasons)


def _samples_per(trace: FlightTrace, seconds: float) -> int:
    return max(1, int(round(seconds / trace.log_interval)))


def detect_freeze(trace: FlightTrace) -> Evidence | None:
    """
    A 15 s window, entirely inside the waypoint phase, in which the vehicle never
    moves 0.5 m horizontally from where the window started.
    """
    width = _samples_per(trace, FREEZE_WINDOW_S) + 1
    if len(trace) < width:
        return None
    moving = trace.phase == Phase.WAYPOINT
    xy = trace.position[:, :2]
    windows = sliding_window_view(xy, (width, 2))[:, 0]
    in_phase = sliding_window_view(moving, width).all(axis=1)
    spread = np.linalg.norm(windows - windows[:, :1, :], axis=2).max(axis=1)
    hits = np.flatnonzero(in_phase & (spread < FREEZE_DISTANCE_M))
    if hits.size == 0:
        return None
    i = int(hits[0])
    return Evidence(start=float(trace.times[i]), end=float(trace.times[i + width - 1]),
                    measured=float(spread[i]), threshold=FREEZE_DISTANCE_M, tag="freeze")


def _segment_distance(points: np.ndarray, start: np.ndarray, end: np.ndarray) -> np.ndarray:
    delta = end - start
    length_sq = float(delta @ delta)
    if length_sq == 0.0:
        return np.linalg.norm(points - start, axis=1)
    u = np.clip((points - start) @ delta / length_sq, 0.0, 1.0)
    return np.linalg.norm(points - (start + u[:, None] * delta), axis=1)


def cross_track_samples(trace: FlightTrace) -> tuple[np.ndarray, np.ndarray]:
    """
    (time, deviation) sampled at 1 Hz.  Deviation is the distance from the current
    waypoint leg (the straight segment between consecutive waypoints) and is zero
    outside the waypoint phase.
    """
    step = _samples_per(trace, 1.0 / DEVIATION_SAMPLE_HZ)
    idx = np.arange(0, len(trace), step)
    times = trace.times[idx]
    deviation = np.zeros(idx.size)
    if trace.mission is None or idx.size == 0:
        return times, deviation
    legs = trace.mission.legs()
    # Legs are (north, east, altitude); positions are NED.
    points = np.column_stack([trace.position[idx, 0], trace.position[idx, 1], -trace.position[idx, 2]])
    leg_idx = trace.leg[idx]
    active = trace.phase[idx] == Phase.WAYPOINT
    for k, (start, end) in enumerate(legs):
        mask = active & (leg_idx == k)
        if np.any(mask):
            deviation[mask] = _segment_distance(points[mask], start, end)
    return times, deviation


def _first_run(mask: np.ndarray, length: int) -> int | None:
    """Start index of the first run of at least `length` consecutive True values."""
    run = 0
    for i, flag in enumerate(mask):
        run = run + 1 if flag else 0
        if run >= length:
            return i - length + 1
    return None


def detect_deviation(trace: FlightTrace) -> Evidence | None:
    """At least 15 consecutive 1 Hz samples further than 1.5 m from the current leg."""
    times, deviation = cross_track_samples(trace)
    start = _first_run(deviation > DEVIATION_LIMIT_M, DEVIATION_COUNT)
    if start is None:
        return None
    end = start + DEVIATION_COUNT - 1
    return Evidence(start=float(times[start]), end=float(times[end]),
                    measured=float(deviation[start:end + 1].min()), threshold=DEVIATION_LIMIT_M, tag="deviation")


def detect_crash(trace: FlightTrace) -> Evidence | None:
    """
    Ground impact faster than 2 m/s outside the landing phase, a roll or pitch
    beyond 90 degrees below 1 m, or a numerically diverged simulation.
    """
    altitude = trace.altitude
    descent = trace.velocity[:, 2] if len(trace) else np.zeros(0)
    impact = (altitude <= 0.0) & (trace.phase != Phase.LAND) & (descent > CRASH_DESCENT_MPS)
    hits = np.flatnonzero(impact)
    if hits.size:
        i = int(hits[0])
        return Evidence(start=float(trace.times[i]), end=float(trace.times[i]),
                        measured=float(descent[i]), threshold=CRASH_DESCENT_MPS, tag="impact")

    tilt = np.maximum(np.abs(trace.state[:, 0]), np.abs(trace.state[:, 1])) if len(trace) else np.zeros(0)
    flipped = (tilt > CRASH_ATTITUDE_DEG) & (altitude < CRASH_ATTITUDE_ALT_M)
    hits = np.flatnonzero(flipped)
    if hits.size:
        i = int(hits[0])
        return Evidence(start=float(trace.times[i]), end=float(trace.times[i]),
                        measured=float(tilt[i]), threshold=CRASH_ATTITUDE_DEG, tag="attitude")

    for t, tag in trace.events:
        if tag == "diverged":
            return Evidence(start=t, end=t, measured=math.inf, threshold=math.inf, tag="diverged")
    return None


def _tracking_errors(trace: FlightTrace) -> tuple[np.ndarray, np.ndarray]:
    altitude_error = np.abs(-trace.target[:, 2] - trace.altitude)
    attitude_error = np.max(np.abs(trace.reference[:, 0:2] - trace.state[:, 0:2]), axis=1)
    return altitude_error, attitude_error


def detect_thrust_loss(trace: FlightTrace) -> Evidence | None:
    """
    All four pre-clamp motor commands at or above 1.0 for at least 2 s while the
    altitude error or attitude error at the end of the saturated stretch is larger
    than at its start.
    """
    if len(trace) == 0:
        return None
    saturated = np.all(trace.motor_raw >= 1.0, axis=1)
    need = _samples_per(trace, THRUST_LOSS_S) + 1
    alt_err, att_err = _tracking_errors(trace)

    i, n = 0, len(trace)
    while i < n:
        if not saturated[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and saturated[j + 1]:
            j += 1
        if j - i + 1 >= need:
            # Check every 2 s stretch inside the run, so a run that starts recovering late still counts.
            for a in range(i, j - need + 2):
                b = a + need - 1
                if alt_err[b] > alt_err[a] or att_err[b] > att_err[a]:
                    growth = max(alt_err[b] - alt_err[a], att_err[b] - att_err[a])
                    return Evidence(start=float(trace.times[a]), end=float(trace.times[b]),
                                    measured=float(trace.times[b] - trace.times[a]),
                                    threshold=THRUST_LOSS_S, tag=f"error_growth={growth:.3f}")
        i = j + 1
    return None


DETECTORS = (("Crash", detect_crash), ("ThrustLoss", detect_thrust_loss),
             ("Deviation", detect_deviation), ("Freeze", detect_freeze))


def classify(trace: FlightTrace, prearm: PrearmResult, injected: bool) -> Verdict:
    """
    Tackling when a pre-arm rejected configuration was injected in flight and any
    detector fires.  Otherwise the first firing detector in the order Crash,
    ThrustLoss, Deviation, Freeze.  Correct when nothing fires.
    """
    fired = [(name, ev) for name, detector in DETECTORS if (ev := detector(trace)) is not None]
    if not fired:
        return Verdict(label=Label.CORRECT)
    names = tuple(name for name, _ in fired)
    if injected and not prearm.accepted:
        return Verdict(label=Label.TACKLING, evidence=fired[0][1], detectors=names)
    return Verdict(label=Label(fired[0][0]), evidence=fired[0][1], detectors=names)
