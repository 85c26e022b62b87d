"""
Learning-guided mutation search.

Segments are clustered with mean shift and a few representatives per cluster are
searched.  For each representative an evolutionary search over the unit box
maximizes the predictor deviation, using the current-to-best mutation

    y_i = x_i + F (x_best - x_i) + F (x_r1 - x_r2)

binomial crossover with one forced coordinate, and greedy parent-wins selection.
The best configurations of every representative are merged into a deduplicated
PotentialSet.

Random numbers for the initial population of segment s come from the stream
(seed, s, 0) and for generation g from (seed, s, g), so searching segments in any
order gives identical results.
"""
import pathlib
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import pandas as pd
from scipy.spatial.distance import pdist
from sklearn.cluster import MeanShift

from .lgd_exception import DimensionMismatchError, LgdValueError, NoSegmentsError, ParamTableError
from .lgd_flightlog import Segment
from .lgd_logging import lgd_logger
from .lgd_paramspec import (Configuration, ParameterTable, dedup_key, default_configuration, denormalize,
                            embed_configuration, normalize, subset_table)
from .lgd_predictor import Normalizer, SurrogateModel, segment_deviations
from .lgd_settings import SearchParams, settings_dict
from .lgd_util import FLOAT_FORMAT, STREAM_CLUSTER, STREAM_SEARCH, StrOrPath, read_json, rng_stream, write_json
from .progress import LgdNoProgress, LgdProgress

BANDWIDTH_SAMPLE = 200
BANDWIDTH_SCALE = 0.5

Fitness = Callable[[np.ndarray], np.ndarray]
"""Maps an (N, D) array of unit-box members to N fitness values (larger is better)."""


@dataclass(frozen=True)
class Clustering:
    labels: np.ndarray
    modes: np.ndarray
    bandwidth: float

    @property
    def clusters(self) -> list[np.ndarray]:
        """Segment indexes of each cluster, in label order."""
        return [np.flatnonzero(self.labels == k) for k in range(len(self.modes))]

    def __len__(self) -> int:
        return len(self.modes)


@dataclass(eq=False)
class Population:
    members: np.ndarray
    fitness: np.ndarray
    generation: int = 0

    def __len__(self) -> int:
        return len(self.members)

    @property
    def best_index(self) -> int:
        """Index of the fittest member; ties go to the lowest index."""
        return int(np.argmax(self.fitness))

    @property
    def best_fitness(self) -> float:
        return float(self.fitness[self.best_index])


@dataclass(frozen=True)
class SegmentResult:
    segment_id: int
    top: list[tuple[Configuration, float]]
    generations: int
    best_history: list[float]


@dataclass(frozen=True)
class PotentialEntry:
    config: Configuration
    fitness: float
    segment_id: int
    sources: tuple[int, ...] = ()


@dataclass(eq=False)
class PotentialSet:
    entries: list[PotentialEntry] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def configs(self) -> list[Configuration]:
        return [e.config for e in self.entries]


def embed_segments(segments: Sequence[Segment], normalizer: Normalizer) -> np.ndarray:
    """One row per segment: the scaled contexts flattened in time order."""
    if not segments:
        raise NoSegmentsError("no segments to embed")
    stacked = np.stack([s.contexts for s in segments])
    return normalizer.contexts(stacked).reshape(len(segments), -1)


def default_bandwidth(embedded: np.ndarray, seed: int) -> float:
    """Half the median pairwise distance of at most 200 rows drawn under `seed`."""
    n = len(embedded)
    if n < 2:
        return 1.0
    rows = embedded
    if n > BANDWIDTH_SAMPLE:
        rows = embedded[np.sort(rng_stream(seed, STREAM_CLUSTER, 0).choice(n, BANDWIDTH_SAMPLE, replace=False))]
    median = float(np.median(pdist(rows)))
    return BANDWIDTH_SCALE * median if median > 0.0 else 1.0


def meanshift_cluster(embedded: np.ndarray, bandwidth: float, max_fit: int | None = None,
                      seed: int = 0) -> Clustering:
    """
    Flat kernel mean shift.  Modes are found on at most `max_fit` rows (all rows when
    None); every row is then labeled with its nearest mode.  Empty clusters are
    dropped and labels renumbered from 0.
    """
    if not bandwidth > 0:
        raise LgdValueError(f"bandwidth must be positive, got {bandwidth}")
    embedded = np.asarray(embedded, dtype=float)
    n = len(embedded)
    if n == 0:
        raise NoSegmentsError("no segments to cluster")

    fit_rows = embedded
    if max_fit is not None and n > max_fit:
        fit_rows = embedded[np.sort(rng_stream(seed, STREAM_CLUSTER, 2).choice(n, max_fit, replace=False))]
    ms = MeanShift(bandwidth=bandwidth, cluster_all=True).fit(fit_rows)
    raw = ms.predict(embedded)
    used, labels = np.unique(raw, return_inverse=True)
    modes = ms.cluster_centers_[used]
    lgd_logger.info("Mean shift found %d clusters in %d segments (bandwidth %.4g)", len(modes), n, bandwidth)
    return Clustering(labels=labels.astype(int), modes=modes, bandwidth=float(bandwidth))


def sample_representatives(clustering: Clustering, m: int, seed: int) -> list[int]:
    """Up to `m` segment indexes per cluster, uniform without replacement, sorted within a cluster."""
    if m < 1:
        raise LgdValueError(f"m must be at least 1, got {m}")
    rng = rng_stream(seed, STREAM_CLUSTER, 1)
    picks: list[int] = []
    for members in clustering.clusters:
        chosen = rng.choice(members, size=min(m, len(members)), replace=False)
        picks.extend(int(i) for i in np.sort(chosen))
    return picks


def de_variant(x: np.ndarray, x_best: np.ndarray, x_r1: np.ndarray, x_r2: np.ndarray, scale: float) -> np.ndarray:
    """Current-to-best/1 difference vector, unclipped."""
    return x + scale * (x_best - x) + scale * (x_r1 - x_r2)


def _distinct_others(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """For each i, two different indexes r1, r2 that are both not i."""
    i = np.arange(n)
    r1 = rng.integers(0, n - 1, size=n)
    r1 = r1 + (r1 >= i)
    r2 = rng.integers(0, n - 2, size=n)
    low, high = np.minimum(i, r1), np.maximum(i, r1)
    r2 = r2 + (r2 >= low)
    r2 = r2 + (r2 >= high)
    return r1, r2


def mutate(pop: Population, scale: float, rng: np.random.Generator) -> np.ndarray:
    """Variant members for the whole population, clipped to the unit box."""
    n = len(pop)
    if n < 4:
        raise LgdValueError(f"mutation needs at least 4 members, got {n}")
    if scale < 0:
        raise LgdValueError(f"scale must be non-negative, got {scale}")
    r1, r2 = _distinct_others(n, rng)
    x = pop.members
    y = de_variant(x, x[pop.best_index], x[r1], x[r2], scale)
    return np.clip(y, 0.0, 1.0)


def crossover(members: np.ndarray, variants: np.ndarray, crossover_rate: float,
              rng: np.random.Generator) -> np.ndarray:
    """Binomial crossover; coordinate j_rand of each member always comes from the variant."""
    if members.shape != variants.shape:
        raise DimensionMismatchError(f"members {members.shape} and variants {variants.shape} differ")
    n, d = members.shape
    take = rng.random((n, d)) < crossover_rate
    take[np.arange(n), rng.integers(0, d, size=n)] = True
    return np.clip(np.where(take, variants, members), 0.0, 1.0)


def select(pop: Population, experimental: np.ndarray, fitness: Fitness) -> Population:
    """Each trial replaces its parent only when its fitness is strictly greater."""
    trial_fitness = np.asarray(fitness(experimental), dtype=float)
    better = trial_fitness > pop.fitness
    return Population(members=np.where(better[:, None], experimental, pop.members),
                      fitness=np.where(better, trial_fitness, pop.fitness),
                      generation=pop.generation + 1)


def initial_population(center: np.ndarray, pop_size: int, jitter: float, rng: np.random.Generator) -> np.ndarray:
    """Member 0 sits exactly on `center`; the rest are jittered by up to `jitter` per coordinate."""
    members = np.clip(center + rng.uniform(-jitter, jitter, (pop_size, len(center))), 0.0, 1.0)
    members[0] = center
    return members


def evolve(fitness: Fitness, initial: np.ndarray, params: SearchParams, seed: int,
           stream: int = 0) -> tuple[Population, list[float]]:
    """
    Run mutate, crossover and select from `initial` until `g_max` generations or
    stagnation: after at least `stagnation_window` generations, stop when the best
    fitness rose by less than `stagnation_eps` over the last window.

    Returns:
        The final population and the best fitness of every generation, starting
        with generation 0.
    """
    pop = Population(members=np.asarray(initial, dtype=float), fitness=np.asarray(fitness(initial), dtype=float))
    history = [pop.best_fitness]
    window = params.stagnation_window
    for g in range(1, params.g_max + 1):
        rng = rng_stream(seed, STREAM_SEARCH, stream, g)
        variants = mutate(pop, params.scale, rng)
        trials = crossover(pop.members, variants, params.crossover_rate, rng)
        pop = select(pop, trials, fitness)
        history.append(pop.best_fitness)
        if g >= window and history[g] - history[g - window] < params.stagnation_eps:
            break
    return pop, history


def top_members(pop: Population, k: int) -> list[int]:
    """Indexes of the k fittest members, fittest first, ties by lower index."""
    return [int(i) for i in np.argsort(-pop.fitness, kind="stable")[:k]]


def search_segment(model: SurrogateModel | None, segment: Segment, table: ParameterTable,
                   params: SearchParams, seed: int, segment_id: int = 0,
                   fitness: Fitness | None = None, center: np.ndarray | None = None) -> SegmentResult:
    """
    Search the configurations that maximize the deviation on `segment`.

    The population starts around the defaults (or `center`, in unit-box coordinates).
    With `params.params` set the population lives in the sub-table's unit box and
    every other parameter is held at its default.  `fitness` replaces the predictor
    deviation, which lets the optimizer be checked on known functions; it receives
    members of the searched box.
    """
    space = subset_table(table, params.params)
    if fitness is None:
        if model is None:
            raise LgdValueError("search_segment needs a model or a fitness function")
        if len(segment) != model.h + 1:
            raise DimensionMismatchError(f"segment length {len(segment)}, model needs {model.h + 1}")
        base = normalize(default_configuration(table), table)
        columns = [table.index(name) for name in space.names]

        def fitness(members: np.ndarray) -> np.ndarray:
            members = np.atleast_2d(members)
            full = np.tile(base, (len(members), 1))
            full[:, columns] = members
            return segment_deviations(model, segment, full, table)

    center = normalize(default_configuration(space), space) if center is None else np.asarray(center, dtype=float)
    members = initial_population(center, params.pop_size, params.jitter, rng_stream(seed, STREAM_SEARCH, segment_id, 0))

    pop, history = evolve(fitness, members, params, seed, stream=segment_id)
    top = [(embed_configuration(denormalize(pop.members[i], space), space, table), float(pop.fitness[i]))
           for i in top_members(pop, params.top_k)]
    lgd_logger.debug("Segment %d: %d generations, best deviation %.6g", segment_id, len(history) - 1, history[-1])
    return SegmentResult(segment_id=segment_id, top=top, generations=len(history) - 1, best_history=history)


def merge_results(results: Sequence[SegmentResult], table: ParameterTable,
                  min_fitness: float | None = None) -> list[PotentialEntry]:
    """
    Union of per-segment results deduplicated by dedup_key.  A duplicate keeps the
    higher fitness (the earlier one on ties) and every contributing segment id.
    """
    merged: dict[tuple[int, ...], PotentialEntry] = {}
    for result in results:
        for config, fit in result.top:
            if min_fitness is not None and not fit > min_fitness:
                continue
            key = dedup_key(config, table)
            old = merged.get(key)
            if old is None:
                merged[key] = PotentialEntry(config=config, fitness=fit, segment_id=result.segment_id,
                                             sources=(result.segment_id,))
                continue
            sources = old.sources if result.segment_id in old.sources else old.sources + (result.segment_id,)
            if fit > old.fitness:
                merged[key] = PotentialEntry(config=config, fitness=fit, segment_id=result.segment_id, sources=sources)
            else:
                merged[key] = PotentialEntry(config=old.config, fitness=old.fitness, segment_id=old.segment_id,
                                             sources=sources)
    return list(merged.values())


def run_search(model: SurrogateModel, representatives: Sequence[tuple[int, Segment]], table: ParameterTable,
               params: SearchParams, seed: int, progress: LgdProgress | None = None) -> PotentialSet:
    """
    Search every (segment id, segment) representative and merge the results.  With
    `params.threshold_filter` only configurations whose deviation exceeds the model
    threshold are kept.
    """
    if not representatives:
        raise NoSegmentsError("no representative segments to search")
    progress = progress or LgdNoProgress()
    results = []
    for n, (segment_id, seg) in enumerate(representatives, start=1):
        result = search_segment(model, seg, table, params, seed, segment_id=segment_id)
        results.append(result)
        progress.result_msg(n, len(representatives), msg=f"segment {segment_id}", result=result.best_history[-1])

    entries = merge_results(results, table, min_fitness=model.threshold if params.threshold_filter else None)
    lgd_logger.info("Search over %d segments produced %d potential configurations", len(results), len(entries))
    return PotentialSet(entries=entries, metadata={
        "params": settings_dict(params),
        "searched_params": subset_table(table, params.params).names,
        "seed": int(seed),
        "generations": {str(r.segment_id): r.generations for r in results},
        "threshold": model.threshold,
    })


def write_potential_set(pset: PotentialSet, table: ParameterTable, path: StrOrPath) -> None:
    """CSV `segment_id,fitness,sources,<param names>` plus `<stem>.json` with the metadata."""
    path = pathlib.Path(path)
    frame = pd.DataFrame([e.config.values for e in pset.entries], columns=table.names)
    frame.insert(0, "sources", [" ".join(str(s) for s in e.sources) for e in pset.entries])
    frame.insert(0, "fitness", [e.fitness for e in pset.entries])
    frame.insert(0, "segment_id", [e.segment_id for e in pset.entries])
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    write_json(path.with_suffix(".json"), pset.metadata)


def read_potential_set(path: StrOrPath, table: ParameterTable) -> PotentialSet:
    path = pathlib.Path(path)
    try:
        frame = pd.read_csv(path, float_precision="round_trip", dtype={"sources": str}, keep_default_na=False)
    except (FileNotFoundError, pd.errors.EmptyDataError) as error:
        raise ParamTableError(f"cannot read potential set {path}: {error}") from error
    expected = ["segment_id", "fitness", "sources", *table.names]
    if list(frame.columns) != expected:
        raise ParamTableError(f"potential set {path} columns do not match the parameter table")
    values = frame[table.names].to_numpy(dtype=float)
    entries = [PotentialEntry(config=Configuration.from_array(values[i]), fitness=float(frame["fitness"].iloc[i]),
                              segment_id=int(frame["segment_id"].iloc[i]),
                              sources=tuple(int(s) for s in str(frame["sources"].iloc[i]).split()))
               for i in range(len(frame))]
    meta_path = path.with_suffix(".json")
    metadata = read_json(meta_path) if meta_path.exists() else {}
    return PotentialSet(entries=entries, metadata=metadata)
