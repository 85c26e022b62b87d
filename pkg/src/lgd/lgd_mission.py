"""
Waypoint missions and the plain-text mission file format.

    # comment
    TAKEOFF 10
    RADIUS 2.0
    WP 40 0 10
    LAND

Waypoints are (north, east, altitude) in meters with altitude positive up.  The
simulator converts them to NED internally.
"""
import pathlib
from dataclasses import dataclass, field

import numpy as np

from .lgd_exception import MissionFormatError
from .lgd_util import StrOrPath, data_path

DEFAULT_TAKEOFF_ALT = 10.0
DEFAULT_ACCEPTANCE_RADIUS = 2.0


@dataclass(frozen=True)
class Mission:
    waypoints: tuple[tuple[float, float, float], ...] = field(default_factory=tuple)
    takeoff_altitude: float = DEFAULT_TAKEOFF_ALT
    acceptance_radius: float = DEFAULT_ACCEPTANCE_RADIUS

    def __post_init__(self):
        if not self.takeoff_altitude > 0:
            raise MissionFormatError(f"takeoff altitude must be positive, got {self.takeoff_altitude}")
        if not self.acceptance_radius > 0:
            raise MissionFormatError(f"acceptance radius must be positive, got {self.acceptance_radius}")

    @property
    def waypoint_array(self) -> np.ndarray:
        return np.array(self.waypoints, dtype=float).reshape(-1, 3)

    def legs(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """
        Straight legs flown in the waypoint phase as (start, end) pairs.  The first leg
        starts above the launch point at takeoff altitude.
        """
        start = np.array([0.0, 0.0, self.takeoff_altitude])
        legs = []
        for wp in self.waypoint_array:
            legs.append((start, wp))
            start = wp
        return legs


def parse_mission(text: str) -> Mission:
    waypoints: list[tuple[float, float, float]] = []
    takeoff = DEFAULT_TAKEOFF_ALT
    radius = DEFAULT_ACCEPTANCE_RADIUS
    land = False

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, *args = line.split()
        keyword = keyword.upper()
        try:
            values = [float(a) for a in args]
        except ValueError as error:
            raise MissionFormatError(f"non-numeric argument in '{raw.strip()}'", line=line_no) from error

        match keyword, len(values):
            case "WP", 3:
                if land:
                    raise MissionFormatError("waypoint after LAND", line=line_no)
                waypoints.append((values[0], values[1], values[2]))
            case "TAKEOFF", 1:
                takeoff = values[0]
            case "RADIUS", 1:
                radius = values[0]
            case "LAND", 0:
                land = True
            case ("WP" | "TAKEOFF" | "RADIUS" | "LAND"), _:
                raise MissionFormatError(f"wrong number of arguments for {keyword}", line=line_no)
            case _:
                raise MissionFormatError(f"unknown directive '{keyword}'", line=line_no)

    return Mission(waypoints=tuple(waypoints), takeoff_altitude=takeoff, acceptance_radius=radius)


def load_mission(path: StrOrPath) -> Mission:
    path = pathlib.Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as error:
        raise MissionFormatError(f"cannot read mission {path}: {error}") from error
    return parse_mission(text)


def builtin_mission() -> Mission:
    """Takeoff to 10 m, six waypoints on a 40 m square-with-diagonal course, land."""
    return load_mission(data_path("mission_loop.txt"))
