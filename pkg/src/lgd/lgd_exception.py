"""Exception classes for lgd."""


class LgdTypeError(TypeError):
    """Type errors associated with setting up lgd

    Raised when bad types are handed to lgd objects and should not be confused
    with a TypeError that indicates an unexpected lower level error.
    """


class LgdValueError(ValueError):
    """Value errors associated with setting up lgd

    These occur when numeric arguments are out of their legal ranges, for
    example a zero time step or a negative bandwidth.
    """


class LgdException(Exception):
    """Specialized exception for lgd.  Every stage failure derives from this."""


class ParamTableError(LgdException):
    """A parameter table, configuration file or rule file could not be parsed."""

    def __init__(self, msg: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {msg}" if row is not None else msg)


class MissionFormatError(LgdException):
    """A mission file line could not be parsed."""

    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


class SimulationDivergedError(LgdException):
    """The plant state became non-finite.  `last_time` is the last finite timestamp."""

    def __init__(self, last_time: float, msg: str = "simulation diverged"):
        self.last_time = last_time
        super().__init__(f"{msg} after t={last_time:.4f}s")


class CampaignFailedError(LgdException):
    """Too few stable flights were retained by a log campaign."""

    def __init__(self, retained: int, total: int):
        self.retained = retained
        self.total = total
        super().__init__(f"campaign retained {retained}/{total} stable flights (minimum is 10%)")


class LogFormatError(LgdException):
    """A LogSet directory or model file has the wrong format version or is truncated."""


class TrainingDivergedError(LgdException):
    """Training loss went non-finite."""

    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"training diverged at epoch {epoch}")


class DimensionMismatchError(LgdException):
    """Feature windows do not match the model, or normalized values are far out of bounds."""


class NoSegmentsError(LgdException):
    """There were no segments available to cluster and search."""


class ManifestError(LgdException):
    """An artifact is missing or does not match the hash recorded in the run manifest."""
