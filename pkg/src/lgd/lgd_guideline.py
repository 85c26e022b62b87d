"""
Range guideline estimation.

A guideline is a box of per-parameter bounds inside the original ranges.  Against a
set of validated configurations it scores two objectives:

    f1 = covered incorrect / covered      (minimize; 1 when nothing is covered)
    f2 = covered                          (maximize)

A non-dominated sorting genetic algorithm with crowding distance searches the box
space.  Each box is encoded as 2D numbers in [0, 1]: the scaled lower bounds followed
by the scaled upper bounds.  Every evaluated box is offered to an archive of
non-dominated guidelines, which is the returned front.
"""
import pathlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from .lgd_exception import LgdValueError, ParamTableError
from .lgd_logging import lgd_logger
from .lgd_monitor import Evidence, Label, Verdict
from .lgd_paramspec import Configuration, ParameterTable, denormalize_array, select_params
from .lgd_settings import GuidelineParams
from .lgd_util import FLOAT_FORMAT, STREAM_GUIDELINE, StrOrPath, rng_stream
from .progress import LgdNoProgress, LgdProgress

RECORD_COLUMNS = ["record_id", "mode", "verdict", "detectors", "evidence_start", "evidence_end",
                  "evidence_measured", "evidence_threshold", "evidence_tag"]
MIN_GAP = 1e-6


@dataclass(frozen=True)
class ValidationRecord:
    """A configuration flown in simulation and its verdict.  `mode` is `mission` or `injection`."""
    config: Configuration
    verdict: Verdict
    mode: str = "mission"

    @property
    def incorrect(self) -> bool:
        return self.verdict.incorrect


@dataclass(frozen=True)
class RangeGuideline:
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    f1: float
    f2: int
    covered_incorrect: int
    reduction: tuple[float, ...]

    @property
    def bounds(self) -> list[tuple[float, float]]:
        return list(zip(self.lower, self.upper))

    @property
    def covered_correct(self) -> int:
        return self.f2 - self.covered_incorrect


def record_arrays(records: Sequence[ValidationRecord]) -> tuple[np.ndarray, np.ndarray]:
    """(N, D) configuration values and the N incorrect flags."""
    if not records:
        return np.zeros((0, 0)), np.zeros(0, dtype=bool)
    return (np.array([r.config.values for r in records], dtype=float),
            np.array([r.incorrect for r in records], dtype=bool))


def covered(lower, upper, values) -> np.ndarray | bool:
    """True where every coordinate lies inside the inclusive bounds."""
    values = np.asarray(values, dtype=float)
    inside = np.all((values >= np.asarray(lower)) & (values <= np.asarray(upper)), axis=-1)
    return bool(inside) if inside.ndim == 0 else inside


def _score(n_covered: int, n_bad: int) -> tuple[float, int]:
    if n_covered == 0:
        return 1.0, 0
    return n_bad / n_covered, n_covered


def objectives(lower, upper, records: Sequence[ValidationRecord]) -> tuple[float, int]:
    """(f1, f2) of one box.  A box covering nothing scores (1, 0)."""
    values, incorrect = record_arrays(records)
    if len(values) == 0:
        return 1.0, 0
    mask = covered(lower, upper, values)
    return _score(int(np.sum(mask)), int(np.sum(mask & incorrect)))


def dominates(a: tuple[float, float], b: tuple[float, float]) -> bool:
    """a is no worse in both objectives (lower f1, higher f2) and better in one."""
    return a[0] <= b[0] and a[1] >= b[1] and (a[0] < b[0] or a[1] > b[1])


def nondominated_sort(objs: np.ndarray) -> list[list[int]]:
    """Fronts of row indexes for minimization objectives `objs` (N, M), best front first."""
    n = len(objs)
    le = np.all(objs[:, None, :] <= objs[None, :, :], axis=2)
    lt = np.any(objs[:, None, :] < objs[None, :, :], axis=2)
    dom = le & lt
    dominated_by = dom.sum(axis=0)
    fronts: list[list[int]] = []
    current = [i for i in range(n) if dominated_by[i] == 0]
    while current:
        fronts.append(current)
        nxt = []
        for p in current:
            for q in np.flatnonzero(dom[p]):
                dominated_by[q] -= 1
                if dominated_by[q] == 0:
                    nxt.append(int(q))
        current = sorted(nxt)
    return fronts


def crowding_distance(front: Sequence[int], objs: np.ndarray) -> np.ndarray:
    """Crowding distance of each member of `front`, boundary members infinite."""
    front = list(front)
    dist = np.zeros(len(front))
    if len(front) <= 2:
        dist[:] = np.inf
        return dist
    sub = objs[front]
    for m in range(objs.shape[1]):
        order = np.argsort(sub[:, m], kind="stable")
        dist[order[0]] = dist[order[-1]] = np.inf
        span = sub[order[-1], m] - sub[order[0], m]
        if span == 0:
            continue
        dist[order[1:-1]] += (sub[order[2:], m] - sub[order[:-2], m]) / span
    return dist


def sbx_crossover(p1: np.ndarray, p2: np.ndarray, eta: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Simulated binary crossover on [0, 1] variables, each variable exchanged with probability 0.5."""
    u = rng.random(p1.shape)
    beta = np.where(u <= 0.5, (2.0 * u) ** (1.0 / (eta + 1.0)), (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta + 1.0)))
    c1 = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2)
    c2 = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2)
    swap = rng.random(p1.shape) < 0.5
    c1, c2 = np.where(swap, c2, c1), np.where(swap, c1, c2)
    return np.clip(c1, 0.0, 1.0), np.clip(c2, 0.0, 1.0)


def polynomial_mutation(z: np.ndarray, eta: float, prob: float, rng: np.random.Generator) -> np.ndarray:
    """Bounded polynomial mutation on [0, 1] variables."""
    u = rng.random(z.shape)
    hit = rng.random(z.shape) < prob
    power = 1.0 / (eta + 1.0)
    left = (2.0 * u + (1.0 - 2.0 * u) * (1.0 - z) ** (eta + 1.0)) ** power - 1.0
    right = 1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * z ** (eta + 1.0)) ** power
    delta = np.where(u < 0.5, left, right)
    return np.clip(np.where(hit, z + delta, z), 0.0, 1.0)


def snap(z: np.ndarray, grid_points: int | None) -> np.ndarray:
    """Round scaled bounds to a k-point grid over each range."""
    if grid_points is None:
        return z
    steps = grid_points - 1
    return np.round(z * steps) / steps


def repair(z: np.ndarray, grid_points: int | None = None) -> np.ndarray:
    """
    Make every encoded box valid: snap to the grid, swap crossed bounds and open up
    zero-width intervals by one grid step (or MIN_GAP without a grid).
    """
    z = snap(np.clip(np.array(z, dtype=float), 0.0, 1.0), grid_points)
    d = z.shape[-1] // 2
    lo, hi = z[..., :d], z[..., d:]
    lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
    gap = 1.0 / (grid_points - 1) if grid_points else MIN_GAP
    flat = lo == hi
    raise_hi = flat & (hi + gap <= 1.0 + 1e-12)
    hi = np.where(raise_hi, hi + gap, hi)
    lo = np.where(flat & ~raise_hi, lo - gap, lo)
    lo, hi = np.clip(lo, 0.0, 1.0), np.clip(hi, 0.0, 1.0)
    if grid_points:
        lo, hi = snap(lo, grid_points), snap(hi, grid_points)
    return np.concatenate([lo, hi], axis=-1)


def decode(z: np.ndarray, table: ParameterTable) -> tuple[np.ndarray, np.ndarray]:
    d = table.dim
    return denormalize_array(z[..., :d], table), denormalize_array(z[..., d:], table)


def _evaluate(pop: np.ndarray, table: ParameterTable, values: np.ndarray,
              incorrect: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """f1, f2 and covered-incorrect counts for every encoded box."""
    lower, upper = decode(pop, table)
    mask = np.all((values[None, :, :] >= lower[:, None, :]) & (values[None, :, :] <= upper[:, None, :]), axis=2)
    n_cov = mask.sum(axis=1)
    n_bad = (mask & incorrect[None, :]).sum(axis=1)
    f1 = np.where(n_cov > 0, n_bad / np.maximum(n_cov, 1), 1.0)
    return f1, n_cov, n_bad


class _Archive:
    """
    Non-dominated guidelines seen so far, one per (f1, f2).  For equal objectives the
    widest box wins, ties going to the lexicographically smaller encoding.
    """

    def __init__(self):
        self.items: dict[tuple[float, int], tuple[np.ndarray, int]] = {}

    @staticmethod
    def _better_box(a: np.ndarray, b: np.ndarray) -> bool:
        d = len(a) // 2
        wa, wb = float(np.sum(a[d:] - a[:d])), float(np.sum(b[d:] - b[:d]))
        if wa != wb:
            return wa > wb
        return tuple(a) < tuple(b)

    def offer(self, z: np.ndarray, f1: float, f2: int, bad: int) -> None:
        key = (float(f1), int(f2))
        if any(dominates(k, key) for k in self.items):
            return
        if key in self.items:
            if self._better_box(z, self.items[key][0]):
                self.items[key] = (z.copy(), int(bad))
            return
        for k in [k for k in self.items if dominates(key, k)]:
            del self.items[k]
        self.items[key] = (z.copy(), int(bad))


def _tournament(ranks: np.ndarray, crowd: np.ndarray, rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.integers(0, len(ranks), size=n)
    b = rng.integers(0, len(ranks), size=n)
    a_wins = (ranks[a] < ranks[b]) | ((ranks[a] == ranks[b]) & (crowd[a] >= crowd[b]))
    return np.where(a_wins, a, b)


def _rank_and_crowd(objs: np.ndarray) -> tuple[np.ndarray, np.ndarray, list[list[int]]]:
    fronts = nondominated_sort(objs)
    ranks = np.zeros(len(objs), dtype=int)
    crowd = np.zeros(len(objs))
    for r, front in enumerate(fronts):
        ranks[front] = r
        crowd[front] = crowding_distance(front, objs)
    return ranks, crowd, fronts


def _environmental_select(objs: np.ndarray, size: int) -> np.ndarray:
    _, crowd, fronts = _rank_and_crowd(objs)
    chosen: list[int] = []
    for front in fronts:
        if len(chosen) + len(front) <= size:
            chosen.extend(front)
            continue
        order = sorted(front, key=lambda i: (-crowd[i], i))
        chosen.extend(order[:size - len(chosen)])
        break
    return np.array(chosen, dtype=int)


def make_guideline(z: np.ndarray, table: ParameterTable, f1: float, f2: int, bad: int) -> RangeGuideline:
    lower, upper = decode(z, table)
    return RangeGuideline(lower=tuple(float(v) for v in lower), upper=tuple(float(v) for v in upper),
                          f1=float(f1), f2=int(f2), covered_incorrect=int(bad),
                          reduction=tuple(float(v) for v in 1.0 - (upper - lower) / table.width))


def pareto_optimize(records: Sequence[ValidationRecord], table: ParameterTable,
                    params: GuidelineParams | None = None, seed: int = 0,
                    progress: LgdProgress | None = None) -> list[RangeGuideline]:
    """
    Search the box space and return the non-dominated guidelines sorted by f2
    ascending.  The full original range is always part of the initial population.
    """
    if not records:
        raise LgdValueError("pareto_optimize needs at least one validation record")
    params = params or GuidelineParams()
    progress = progress or LgdNoProgress()
    values, incorrect = record_arrays(records)
    if values.shape[1] != table.dim:
        raise LgdValueError(f"records have {values.shape[1]} parameters, table has {table.dim}")

    rng = rng_stream(seed, STREAM_GUIDELINE)
    n_var = 2 * table.dim
    size = params.pop_size
    pm = params.mutation_prob if params.mutation_prob is not None else 1.0 / n_var
    archive = _Archive()

    pop = rng.random((size, n_var))
    pop[0] = np.concatenate([np.zeros(table.dim), np.ones(table.dim)])
    pop = repair(pop, params.grid_points)

    def assess(boxes: np.ndarray) -> np.ndarray:
        f1, f2, bad = _evaluate(boxes, table, values, incorrect)
        for i in range(len(boxes)):
            archive.offer(boxes[i], f1[i], f2[i], bad[i])
        return np.column_stack([f1, -f2.astype(float)])

    objs = assess(pop)
    for gen in range(1, params.generations + 1):
        ranks, crowd, _ = _rank_and_crowd(objs)
        parents = pop[_tournament(ranks, crowd, rng, size + size % 2)]
        kids = parents.copy()
        for k in range(0, len(parents), 2):
            if rng.random() < params.crossover_prob:
                kids[k], kids[k + 1] = sbx_crossover(parents[k], parents[k + 1], params.crossover_eta, rng)
        kids = repair(polynomial_mutation(kids, params.mutation_eta, pm, rng), params.grid_points)[:size]

        merged = np.vstack([pop, kids])
        merged_objs = np.vstack([objs, assess(kids)])
        keep = _environmental_select(merged_objs, size)
        pop, objs = merged[keep], merged_objs[keep]
        progress.result_msg(gen, params.generations, msg=f"generation {gen}", result=len(archive.items))

    front = [make_guideline(z, table, f1, f2, bad) for (f1, f2), (z, bad) in archive.items.items()]
    front.sort(key=lambda g: (g.f2, g.f1, g.lower, g.upper))
    lgd_logger.info("Guideline search kept %d Pareto guidelines from %d records", len(front), len(records))
    return front


def select_guideline(front: Sequence[RangeGuideline], max_f1: float) -> RangeGuideline | None:
    """The guideline covering the most records among those with f1 <= max_f1 (lower f1 on ties)."""
    eligible = [g for g in front if g.f1 <= max_f1]
    if not eligible:
        return None
    return max(eligible, key=lambda g: (g.f2, -g.f1))


def coverage_summary(guideline: RangeGuideline, records: Sequence[ValidationRecord]) -> dict[str, float]:
    """Covered incorrect (I), correct (C) and total (V) counts and their ratios to the record totals."""
    values, incorrect = record_arrays(records)
    total_i = int(incorrect.sum())
    total_v = len(records)
    total_c = total_v - total_i
    mask = covered(guideline.lower, guideline.upper, values) if total_v else np.zeros(0, dtype=bool)
    i = int(np.sum(mask & incorrect))
    v = int(np.sum(mask))
    c = v - i
    return {"I": i, "C": c, "V": v,
            "I_ratio": i / total_i if total_i else 0.0,
            "C_ratio": c / total_c if total_c else 0.0,
            "V_ratio": v / total_v if total_v else 0.0}


def write_guideline_report(front: Sequence[RangeGuideline], table: ParameterTable,
                           records: Sequence[ValidationRecord], directory: StrOrPath) -> dict[str, pathlib.Path]:
    """
    Write `guidelines.csv` (guideline_id,param,lower,upper,reduce_pct),
    `front.csv` (guideline_id,f1,f2,covered,covered_incorrect plus coverage ratios) and
    `front_plot.csv` (f2,f1).
    """
    directory = pathlib.Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows, summary = [], []
    for gid, g in enumerate(front):
        for name, lo, hi, red in zip(table.names, g.lower, g.upper, g.reduction):
            rows.append({"guideline_id": gid, "param": name, "lower": lo, "upper": hi, "reduce_pct": 100.0 * red})
        cov = coverage_summary(g, records)
        summary.append({"guideline_id": gid, "f1": g.f1, "f2": g.f2, "covered": g.f2,
                        "covered_incorrect": g.covered_incorrect, "I_ratio": cov["I_ratio"],
                        "C_ratio": cov["C_ratio"], "V_ratio": cov["V_ratio"]})

    paths = {"guidelines": directory / "guidelines.csv", "front": directory / "front.csv",
             "front_plot": directory / "front_plot.csv"}
    pd.DataFrame(rows, columns=["guideline_id", "param", "lower", "upper", "reduce_pct"]).to_csv(
        paths["guidelines"], index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    front_frame = pd.DataFrame(summary, columns=["guideline_id", "f1", "f2", "covered", "covered_incorrect",
                                                 "I_ratio", "C_ratio", "V_ratio"])
    front_frame.to_csv(paths["front"], index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    front_frame[["f2", "f1"]].to_csv(paths["front_plot"], index=False, float_format=FLOAT_FORMAT,
                                     lineterminator="\n")
    return paths


def write_records(records: Sequence[ValidationRecord], table: ParameterTable, path: StrOrPath) -> None:
    """Validation record CSV: the verdict and its evidence followed by one column per parameter."""
    rows = []
    for i, r in enumerate(records):
        ev = r.verdict.evidence
        rows.append([i, r.mode, r.verdict.label.value, " ".join(r.verdict.detectors),
                     ev.start if ev else None, ev.end if ev else None, ev.measured if ev else None,
                     ev.threshold if ev else None, ev.tag if ev else "", *r.config.values])
    frame = pd.DataFrame(rows, columns=RECORD_COLUMNS + list(table.names))
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def read_records(path: StrOrPath, table: ParameterTable) -> list[ValidationRecord]:
    path = pathlib.Path(path)
    try:
        frame = pd.read_csv(path, float_precision="round_trip", keep_default_na=False,
                            dtype={"mode": str, "verdict": str, "detectors": str, "evidence_tag": str})
    except (FileNotFoundError, pd.errors.EmptyDataError) as error:
        raise ParamTableError(f"cannot read validation records {path}: {error}") from error
    if list(frame.columns) != RECORD_COLUMNS + list(table.names):
        raise ParamTableError(f"validation records {path} columns do not match the parameter table")

    records = []
    values = frame[table.names].to_numpy(dtype=float)
    for i, row in enumerate(frame.itertuples(index=False)):
        label = Label(row.verdict)
        evidence = None
        if label is not Label.CORRECT:
            evidence = Evidence(start=float(row.evidence_start), end=float(row.evidence_end),
                                measured=float(row.evidence_measured), threshold=float(row.evidence_threshold),
                                tag=str(row.evidence_tag))
        verdict = Verdict(label=label, evidence=evidence, detectors=tuple(str(row.detectors).split()))
        records.append(ValidationRecord(config=Configuration.from_array(values[i]), verdict=verdict,
                                        mode=str(row.mode)))
    return records


def read_guideline_report(directory: StrOrPath, table: ParameterTable) -> list[RangeGuideline]:
    """
    Rebuild the front written by write_guideline_report, in file order.  A report
    over a parameter subset is read against that subset of `table`.
    """
    directory = pathlib.Path(directory)
    try:
        bounds = pd.read_csv(directory / "guidelines.csv", float_precision="round_trip")
        summary = pd.read_csv(directory / "front.csv", float_precision="round_trip")
    except (FileNotFoundError, pd.errors.EmptyDataError) as error:
        raise ParamTableError(f"cannot read guideline report in {directory}: {error}") from error
    if summary.empty:
        return []

    names = list(dict.fromkeys(bounds["param"]))
    space = table if names == list(table.names) else select_params(table, names)
    front = []
    for row in summary.itertuples(index=False):
        rows = bounds[bounds["guideline_id"] == row.guideline_id]
        if list(rows["param"]) != list(space.names):
            raise ParamTableError(f"guideline {row.guideline_id} in {directory} does not match the parameter table")
        lower = rows["lower"].to_numpy(dtype=float)
        upper = rows["upper"].to_numpy(dtype=float)
        front.append(RangeGuideline(lower=tuple(float(v) for v in lower), upper=tuple(float(v) for v in upper),
                                    f1=float(row.f1), f2=int(row.f2), covered_incorrect=int(row.covered_incorrect),
                                    reduction=tuple(float(v) for v in 1.0 - (upper - lower) / space.width)))
    return front
