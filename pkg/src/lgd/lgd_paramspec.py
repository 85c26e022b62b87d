"""
The control-parameter universe.

A ParameterTable is an ordered list of ParameterSpec rows (name, manufacturer range,
default, unit and the flight-stack module that owns it).  The order of the table
defines the vector layout of every Configuration downstream, so everything here is
positional.  Tables are immutable once loaded and all operations are pure.
"""
import csv
import io
import pathlib
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .lgd_exception import ParamTableError
from .lgd_logging import lgd_logger
from .lgd_util import StrOrPath, data_path, text_hash

TABLE_COLUMNS = ["name", "lower", "upper", "default", "unit", "module_tag"]
DEDUP_DECIMALS = 3

# Parameters of the six-dimensional comparison study.
COMPARISON_PARAMS = ["PSC_VELXY_P", "INS_POS1_Z", "INS_POS2_Z", "INS_POS3_Z", "WPNAV_SPEED", "ANGLE_MAX"]


class Unit(str, Enum):
    GAIN = "gain"
    CENTIDEGREES = "centidegrees"
    CM_PER_S = "cm_per_s"
    CM_PER_S2 = "cm_per_s2"
    METERS = "meters"


class ModuleTag(str, Enum):
    CONTROLLER = "controller"
    MISSION = "mission"
    SENSOR = "sensor"


@dataclass(frozen=True, slots=True)
class ParameterSpec:
    """One bounded parameter, stored in the flight stack's own units."""
    name: str
    lower: float
    upper: float
    default: float
    unit: Unit = Unit.GAIN
    module_tag: ModuleTag = ModuleTag.CONTROLLER

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ParamTableError(f"{self.name}: lower ({self.lower}) must be below upper ({self.upper})")
        if not self.lower <= self.default <= self.upper:
            raise ParamTableError(f"{self.name}: default {self.default} outside [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower


class ParameterTable:
    """
    Ordered, immutable collection of ParameterSpec.

    The vectors `lower`, `upper`, `default` and `width` are cached numpy arrays in
    table order so configuration arithmetic is vectorized.
    """

    def __init__(self, specs: Sequence[ParameterSpec]):
        specs = tuple(specs)
        if not specs:
            raise ParamTableError("a parameter table needs at least one parameter")
        seen: set[str] = set()
        for row, spec in enumerate(specs, start=1):
            if spec.name in seen:
                raise ParamTableError(f"duplicate parameter name '{spec.name}'", row=row)
            seen.add(spec.name)
        self.specs: tuple[ParameterSpec, ...] = specs
        self._index = {spec.name: i for i, spec in enumerate(specs)}

    def __len__(self) -> int:
        return len(self.specs)

    def __iter__(self) -> Iterator[ParameterSpec]:
        return iter(self.specs)

    def __getitem__(self, item: int | str) -> ParameterSpec:
        if isinstance(item, str):
            return self.specs[self.index(item)]
        return self.specs[item]

    def __eq__(self, other) -> bool:
        return isinstance(other, ParameterTable) and self.specs == other.specs

    def __hash__(self) -> int:
        return hash(self.specs)

    def __repr__(self) -> str:
        return f"<ParameterTable(D={len(self)})>"

    @property
    def dim(self) -> int:
        return len(self.specs)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError as error:
            raise ParamTableError(f"unknown parameter '{name}'") from error

    @cached_property
    def names(self) -> list[str]:
        return [spec.name for spec in self.specs]

    @cached_property
    def lower(self) -> np.ndarray:
        return np.array([spec.lower for spec in self.specs], dtype=float)

    @cached_property
    def upper(self) -> np.ndarray:
        return np.array([spec.upper for spec in self.specs], dtype=float)

    @cached_property
    def default(self) -> np.ndarray:
        return np.array([spec.default for spec in self.specs], dtype=float)

    @cached_property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def to_csv_text(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        for spec in self.specs:
            writer.writerow([spec.name, repr(spec.lower), repr(spec.upper), repr(spec.default),
                             spec.unit.value, spec.module_tag.value])
        return buffer.getvalue()


@dataclass(frozen=True, slots=True)
class Configuration:
    """One concrete value assignment, positionally aligned with a ParameterTable."""
    values: tuple[float, ...]

    @classmethod
    def from_array(cls, values) -> "Configuration":
        return cls(tuple(float(v) for v in np.asarray(values, dtype=float).ravel()))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)

    def __len__(self) -> int:
        return len(self.values)

    def value(self, table: ParameterTable, name: str) -> float:
        return self.values[table.index(name)]

    def with_values(self, table: ParameterTable, **updates: float) -> "Configuration":
        """Copy with the named parameters replaced."""
        values = list(self.values)
        for name, value in updates.items():
            values[table.index(name)] = float(value)
        return Configuration(tuple(values))

    def as_dict(self, table: ParameterTable) -> dict[str, float]:
        return dict(zip(table.names, self.values))


def _parse_float(text: str, field: str, row: int) -> float:
    try:
        return float(text)
    except (TypeError, ValueError) as error:
        raise ParamTableError(f"cannot parse {field} '{text}'", row=row) from error


def parse_param_table(text: str) -> ParameterTable:
    """Parse the CSV text of a parameter table (header `name,lower,upper,default,unit,module_tag`)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != TABLE_COLUMNS:
        raise ParamTableError(f"expected header {','.join(TABLE_COLUMNS)}", row=0)

    specs: list[ParameterSpec] = []
    names: set[str] = set()
    for row, fields in enumerate(reader, start=1):
        if not fields or all(not f.strip() for f in fields):
            continue
        if len(fields) != len(TABLE_COLUMNS):
            raise ParamTableError(f"expected {len(TABLE_COLUMNS)} fields, got {len(fields)}", row=row)
        name, lower, upper, default, unit, tag = (f.strip() for f in fields)
        if name in names:
            raise ParamTableError(f"duplicate parameter name '{name}'", row=row)
        try:
            spec = ParameterSpec(name=name,
                                 lower=_parse_float(lower, "lower", row),
                                 upper=_parse_float(upper, "upper", row),
                                 default=_parse_float(default, "default", row),
                                 unit=Unit(unit),
                                 module_tag=ModuleTag(tag))
        except ValueError as error:
            raise ParamTableError(str(error), row=row) from error
        except ParamTableError as error:
            raise ParamTableError(str(error), row=row) from error
        names.add(name)
        specs.append(spec)
    return ParameterTable(specs)


def load_param_table(path: StrOrPath) -> ParameterTable:
    """Load a parameter table CSV, preserving row order."""
    path = pathlib.Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as error:
        raise ParamTableError(f"cannot read parameter table {path}: {error}") from error
    table = parse_param_table(text)
    lgd_logger.debug("Loaded %d parameters from %s", len(table), path)
    return table


def default_table() -> ParameterTable:
    """The shipped 23 parameter table."""
    return load_param_table(data_path("params_default.csv"))


def table_hash(table: ParameterTable) -> str:
    return text_hash(table.to_csv_text())


def default_configuration(table: ParameterTable) -> Configuration:
    return Configuration.from_array(table.default)


def sample_uniform(table: ParameterTable, rng: np.random.Generator) -> Configuration:
    """Each coordinate uniform in its range."""
    return Configuration.from_array(rng.uniform(table.lower, table.upper))


def clip_to_range(config: Configuration, table: ParameterTable) -> Configuration:
    """Clamp every coordinate into its manufacturer range."""
    return Configuration.from_array(np.clip(config.array, table.lower, table.upper))


def normalize_array(values: np.ndarray, table: ParameterTable) -> np.ndarray:
    """Raw values (any leading shape, last axis D) to the unit box."""
    return (np.asarray(values, dtype=float) - table.lower) / table.width


def denormalize_array(unit: np.ndarray, table: ParameterTable) -> np.ndarray:
    """Unit-box values back to raw units.  Written so u=0 and u=1 hit the bounds exactly."""
    unit = np.asarray(unit, dtype=float)
    return table.lower * (1.0 - unit) + table.upper * unit


def normalize(config: Configuration, table: ParameterTable) -> np.ndarray:
    return normalize_array(config.array, table)


def denormalize(unit: np.ndarray, table: ParameterTable) -> Configuration:
    return Configuration.from_array(denormalize_array(unit, table))


def dedup_key(config: Configuration, table: ParameterTable) -> tuple[int, ...]:
    """Normalized coordinates rounded to three decimals, as integers."""
    scaled = np.rint(normalize(config, table) * 10 ** DEDUP_DECIMALS)
    return tuple(int(v) for v in scaled)


def select_params(table: ParameterTable, names: Sequence[str]) -> ParameterTable:
    """Sub-table holding `names`, kept in the order they appear in `table`."""
    wanted = set(names)
    for name in names:
        table.index(name)
    return ParameterTable([spec for spec in table.specs if spec.name in wanted])


def subset_table(table: ParameterTable, names: Sequence[str] | None) -> ParameterTable:
    """
    The table a search or guideline run works over.  None keeps the whole table;
    the single name `comparison` stands for COMPARISON_PARAMS.
    """
    if not names:
        return table
    if list(names) == ["comparison"]:
        names = COMPARISON_PARAMS
    return select_params(table, names)


def embed_configuration(sub_config: Configuration,
                        sub_table: ParameterTable,
                        full_table: ParameterTable,
                        base: Configuration | None = None) -> Configuration:
    """
    Expand a configuration over `sub_table` to `full_table`.

    Parameters outside the sub-table take their value from `base`, which defaults
    to the full table's defaults.
    """
    values = list((base or default_configuration(full_table)).values)
    for name, value in zip(sub_table.names, sub_config.values):
        values[full_table.index(name)] = value
    return Configuration(tuple(values))


def project_configuration(config: Configuration, full_table: ParameterTable,
                          sub_table: ParameterTable) -> Configuration:
    """The sub-table's coordinates of a full configuration."""
    return Configuration(tuple(config.values[full_table.index(name)] for name in sub_table.names))


def save_configuration(config: Configuration, table: ParameterTable, path: StrOrPath) -> None:
    """Header of parameter names, one value row.  repr() keeps every float exact."""
    if len(config) != len(table):
        raise ParamTableError(f"configuration has {len(config)} values, table has {len(table)}")
    with pathlib.Path(path).open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(table.names)
        writer.writerow([repr(v) for v in config.values])


def load_configuration(path: StrOrPath, table: ParameterTable) -> Configuration:
    """Read a configuration file; columns may be in any order but must name every parameter."""
    try:
        with pathlib.Path(path).open("rt", encoding="utf-8") as f:
            rows = [r for r in csv.reader(f) if r]
    except OSError as error:
        raise ParamTableError(f"cannot read configuration {path}: {error}") from error
    if len(rows) != 2:
        raise ParamTableError(f"configuration file needs a header and one value row, found {len(rows)} rows")
    header, values = [h.strip() for h in rows[0]], rows[1]
    if len(header) != len(values):
        raise ParamTableError("header and value row differ in length", row=1)
    missing = set(table.names) - set(header)
    unknown = set(header) - set(table.names)
    if missing or unknown:
        raise ParamTableError(f"configuration names mismatch: missing={sorted(missing)} unknown={sorted(unknown)}")
    by_name = {name: _parse_float(v, name, 1) for name, v in zip(header, values)}
    return Configuration(tuple(by_name[name] for name in table.names))
