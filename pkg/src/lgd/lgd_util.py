"""
Small helpers shared by the lgd modules: type aliases, seeded random streams,
content hashing and stable JSON output.
"""
import hashlib
import json
import pathlib
from importlib import resources
from typing import Any, TypeAlias

import numpy as np

StrOrNone: TypeAlias = str | None
"""Type alias for a string or None."""

IntOrNone: TypeAlias = int | None
"""Type alias for an integer or None."""

StrOrPath: TypeAlias = str | pathlib.Path
StrOrPathOrNone: TypeAlias = StrOrPath | None

# Integer tags mixed into seed sequences so each stage draws from its own stream.
STREAM_CAMPAIGN = 1
STREAM_SIM = 2
STREAM_TRAIN = 3
STREAM_CLUSTER = 4
STREAM_SEARCH = 5
STREAM_GUIDELINE = 6
STREAM_EVALUATE = 7
STREAM_VALIDATE = 8


def rng_stream(seed: int, *keys: int) -> np.random.Generator:
    """
    Return a generator for the stream identified by (seed, *keys).

    Streams with different keys are statistically independent and each one
    is reproducible on its own, so work items can be run in any order (or in
    parallel) and still draw exactly the same numbers.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(k) for k in keys]]))


def derive_seed(seed: int, *keys: int) -> int:
    """Collapse a (seed, *keys) stream into a single 63 bit integer seed."""
    ss = np.random.SeedSequence([int(seed), *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def file_hash(path: StrOrPath) -> str:
    """sha256 hex digest of a file's bytes."""
    h = hashlib.sha256()
    with pathlib.Path(path).open("rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def text_hash(text: str) -> str:
    """sha256 hex digest of a UTF-8 string."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_json(path: StrOrPath, data: Any) -> None:
    """Write JSON with sorted keys so repeated runs produce identical bytes."""
    pathlib.Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path: StrOrPath) -> Any:
    with pathlib.Path(path).open("rt", encoding="utf-8") as f:
        return json.load(f)


def data_path(name: str) -> pathlib.Path:
    """Path to a file shipped in the lgd.data package."""
    return pathlib.Path(str(resources.files("lgd.data").joinpath(name)))


FLOAT_FORMAT = "%.17g"
"""pandas float_format that round-trips every float64 exactly."""
