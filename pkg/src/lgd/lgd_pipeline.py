"""
Stage commands that wire the modules together on disk.

Every stage reads its inputs from and writes its outputs to one output directory:

    logs/               LogSet of stable campaign flights          (genlogs)
    model.lgd           trained predictor with its threshold       (train)
    potential.csv       potentially incorrect configurations       (search)
    records.csv         validation verdicts                        (validate)
    guidelines/         Pareto front tables and plot data          (guideline)
    report.csv/.md      verdict tally and true-positive ratio      (report)
    evaluate.csv        predictor accuracy on validated configs    (evaluate)
    manifest.json       artifact hashes, seeds, table hash, version
    timings.csv         wall clock per stage

A stage only consumes an artifact whose hash matches the one recorded when it was
produced, so any stage can be re-run from disk without its predecessors.
"""
import os
import pathlib
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from importlib.metadata import PackageNotFoundError, version
from typing import Iterator, Sequence

import pandas as pd

from .lgd_exception import LgdException, ManifestError, NoSegmentsError, ParamTableError
from .lgd_flightlog import LogSet, generate_campaign, read_log, segment, split_flights, write_log
from .lgd_guideline import (RangeGuideline, ValidationRecord, pareto_optimize, read_guideline_report, read_records,
                            write_guideline_report, write_records)
from .lgd_logging import lgd_logger
from .lgd_mission import Mission, builtin_mission, load_mission
from .lgd_monitor import classify, prearm_check
from .lgd_paramspec import (ParameterTable, default_configuration, default_table, load_param_table,
                            project_configuration, subset_table, table_hash)
from .lgd_predictor import (Normalizer, SurrogateModel, calibrate_threshold, evaluate_classifier, extract_features,
                            load_model, predict_series, save_model, train)
from .lgd_report import ReportSummary, summarize
from .lgd_runner import LgdMissionPool, MissionJob, fly
from .lgd_search import (PotentialSet, default_bandwidth, embed_segments, meanshift_cluster, read_potential_set,
                         run_search, sample_representatives, write_potential_set)
from .lgd_simkernel import Injection
from .lgd_util import FLOAT_FORMAT, STREAM_VALIDATE, StrOrPath, StrOrPathOrNone, derive_seed, file_hash, \
    read_json, text_hash, write_json
from .progress import LgdNoProgress, LgdProgress
from .rc import LgdRC
from .serialize import LgdDumpConfig, LgdDumpCSV, LgdDumpMarkdown

MANIFEST_FILE = "manifest.json"
TIMINGS_FILE = "timings.csv"
DEFAULT_OUT_DIR = "lgd_out"
OUT_ENV = "LGD_OUT"

ARTIFACTS = {
    "logs": "logs",
    "model": "model.lgd",
    "potential": "potential.csv",
    "records": "records.csv",
    "guidelines": "guidelines",
    "report_csv": "report.csv",
    "report_md": "report.md",
    "evaluate": "evaluate.csv",
    "prediction": "prediction.csv",
}


def lgd_version() -> str:
    try:
        return version("lgd")
    except PackageNotFoundError:
        return "unknown"


def artifact_hash(path: StrOrPath) -> str:
    """File hash, or for a directory the hash of its sorted (name, file hash) listing."""
    path = pathlib.Path(path)
    if path.is_dir():
        listing = "".join(f"{p.relative_to(path).as_posix()}:{file_hash(p)}\n"
                          for p in sorted(path.rglob("*")) if p.is_file())
        return text_hash(listing)
    return file_hash(path)


def resolve_out_dir(out_dir: StrOrPathOrNone = None, rc: LgdRC | None = None) -> pathlib.Path:
    """LGD_OUT wins over the `out_dir` argument, which wins over the rc file and the default."""
    chosen = os.environ.get(OUT_ENV) or out_dir or (rc.out_dir if rc else None) or DEFAULT_OUT_DIR
    return pathlib.Path(chosen)


@dataclass
class RunManifest:
    """
    Provenance of one output directory.  `artifacts` maps a name to its path relative
    to the directory and its content hash.  Timings are kept apart in timings.csv so
    manifest.json is identical for identical runs.
    """
    artifacts: dict[str, dict[str, str]] = field(default_factory=dict)
    seeds: dict[str, int] = field(default_factory=dict)
    table_hash: str = ""
    version: str = ""
    timings: dict[str, float] = field(default_factory=dict)

    @classmethod
    def load(cls, out_dir: StrOrPath) -> "RunManifest":
        out_dir = pathlib.Path(out_dir)
        manifest = cls()
        path = out_dir / MANIFEST_FILE
        if path.exists():
            try:
                data = read_json(path)
            except ValueError as error:
                raise ManifestError(f"corrupt run manifest {path}: {error}") from error
            manifest = cls(artifacts=data.get("artifacts", {}), seeds=data.get("seeds", {}),
                           table_hash=data.get("table_hash", ""), version=data.get("version", ""))
        timings = out_dir / TIMINGS_FILE
        if timings.exists():
            frame = pd.read_csv(timings)
            manifest.timings = dict(zip(frame["stage"], frame["seconds"].astype(float)))
        return manifest

    def save(self, out_dir: StrOrPath) -> None:
        out_dir = pathlib.Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_json(out_dir / MANIFEST_FILE, {"artifacts": self.artifacts, "seeds": self.seeds,
                                             "table_hash": self.table_hash, "version": self.version})
        pd.DataFrame({"stage": list(self.timings), "seconds": list(self.timings.values())}).to_csv(
            out_dir / TIMINGS_FILE, index=False, lineterminator="\n")

    def record(self, name: str, out_dir: StrOrPath, relative: str) -> None:
        self.artifacts[name] = {"path": relative, "hash": artifact_hash(pathlib.Path(out_dir) / relative)}

    def verify(self, name: str, out_dir: StrOrPath, table: ParameterTable | None = None) -> pathlib.Path:
        """
        Path of artifact `name` after checking it against the manifest.

        Raises:
            ManifestError: the manifest has no record of the artifact (it was placed
                there by hand or its stage never finished), the file changed since it
                was recorded, or the parameter table differs from the one the run
                started with.
        """
        out_dir = pathlib.Path(out_dir)
        if table is not None and self.table_hash and self.table_hash != table_hash(table):
            raise ManifestError(f"parameter table differs from the one recorded in {out_dir / MANIFEST_FILE}")
        entry = self.artifacts.get(name)
        if entry is None:
            raise ManifestError(f"artifact {name} is not recorded in {out_dir / MANIFEST_FILE}; "
                                f"re-run the stage that produces it")
        path = out_dir / entry["path"]
        if not path.exists():
            raise ManifestError(f"artifact {name} recorded in the manifest is missing: {path}")
        if artifact_hash(path) != entry["hash"]:
            raise ManifestError(f"artifact {name} at {path} does not match its manifest hash")
        return path


@dataclass
class RunContext:
    """Everything the stages share: where to write, what to fly and how to seed it."""
    out_dir: pathlib.Path
    table: ParameterTable
    mission: Mission
    seed: int = 0
    jobs: int = 1
    rc: LgdRC = field(default_factory=LgdRC)
    progress: LgdProgress = field(default_factory=LgdNoProgress)
    manifest: RunManifest = field(default_factory=RunManifest)

    @classmethod
    def create(cls,
               out_dir: StrOrPathOrNone = None,
               table: StrOrPathOrNone = None,
               mission: StrOrPathOrNone = None,
               seed: int | None = None,
               jobs: int | None = None,
               rc: LgdRC | None = None,
               progress: LgdProgress | None = None) -> "RunContext":
        """Arguments win over the rc file, which wins over the defaults."""
        rc = rc or LgdRC()
        table_path = table or rc.table
        mission_path = mission or rc.mission
        out = resolve_out_dir(out_dir, rc)
        out.mkdir(parents=True, exist_ok=True)
        return cls(out_dir=out,
                   table=load_param_table(table_path) if table_path else default_table(),
                   mission=load_mission(mission_path) if mission_path else builtin_mission(),
                   seed=int(seed if seed is not None else (rc.seed if rc.seed is not None else 0)),
                   jobs=int(jobs if jobs is not None else (rc.jobs if rc.jobs is not None else 1)),
                   rc=rc,
                   progress=progress or LgdNoProgress(),
                   manifest=RunManifest.load(out))

    def path(self, name: str) -> pathlib.Path:
        return self.out_dir / ARTIFACTS[name]

    def require(self, name: str) -> pathlib.Path:
        return self.manifest.verify(name, self.out_dir, self.table)

    def produced(self, *names: str) -> None:
        for name in names:
            self.manifest.record(name, self.out_dir, ARTIFACTS[name])
        self.manifest.save(self.out_dir)

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        """Time a stage and record its seed."""
        lgd_logger.info("Stage %s started (seed %d)", name, self.seed)
        start = time.perf_counter()
        yield
        self.manifest.timings[name] = time.perf_counter() - start
        self.manifest.seeds[name] = self.seed
        self.manifest.version = lgd_version()
        self.manifest.save(self.out_dir)
        lgd_logger.info("Stage %s finished in %.2fs", name, self.manifest.timings[name])


def _check_logset(ctx: RunContext, logset: LogSet) -> None:
    if list(logset.param_names) != list(ctx.table.names):
        raise ParamTableError("LogSet parameters do not match the parameter table")


def cmd_genlogs(ctx: RunContext, n_flights: int | None = None, sigma_fraction: float | None = None) -> pathlib.Path:
    """Fly the campaign and write the LogSet.  Starts a fresh manifest for the directory."""
    settings = ctx.rc.campaign(n_flights=n_flights, sigma_fraction=sigma_fraction)
    with ctx.stage("genlogs"):
        logset = generate_campaign(ctx.table, settings.n_flights, ctx.mission, ctx.seed, settings=settings,
                                   jobs=ctx.jobs, progress=ctx.progress)
        write_log(logset, ctx.path("logs"))
        ctx.manifest.artifacts.clear()
        ctx.manifest.table_hash = table_hash(ctx.table)
        ctx.produced("logs")
    return ctx.path("logs")


def cmd_train(ctx: RunContext, h: int | None = None, hidden_size: int | None = None, epochs: int | None = None,
              learning_rate: float | None = None, threshold_split: str | None = None) -> pathlib.Path:
    """
    Train the predictor and calibrate its threshold on stable windows, taken from the
    training flights or from held-out flights depending on `threshold_split`.
    """
    hp = ctx.rc.predictor(h=h, hidden_size=hidden_size, epochs=epochs, learning_rate=learning_rate,
                          threshold_split=threshold_split)
    with ctx.stage("train"):
        logset = read_log(ctx.require("logs"))
        _check_logset(ctx, logset)
        if hp.threshold_split == "val":
            train_set, calib_set = split_flights(logset, hp.validation_fraction, ctx.seed)
        else:
            train_set = calib_set = logset
        normalizer = Normalizer.fit(train_set, ctx.table)
        dataset = extract_features(train_set, ctx.table, hp.h, normalizer=normalizer,
                                   max_windows=hp.max_windows, seed=ctx.seed)
        model = train(dataset, hp, ctx.seed, progress=ctx.progress)
        threshold = calibrate_threshold(model, calib_set)
        model = model.with_threshold(threshold)
        model.metadata["threshold_split"] = hp.threshold_split
        save_model(model, ctx.path("model"))
        lgd_logger.info("Deviation threshold %.6g calibrated on the %s flights", threshold, hp.threshold_split)
        ctx.produced("model")
    return ctx.path("model")


def _load_model_and_logs(ctx: RunContext) -> tuple[SurrogateModel, LogSet]:
    model = load_model(ctx.require("model"))
    logset = read_log(ctx.require("logs"))
    _check_logset(ctx, logset)
    return model, logset


def cmd_search(ctx: RunContext, pop_size: int | None = None, scale: float | None = None,
               crossover_rate: float | None = None, g_max: int | None = None, m: int | None = None,
               bandwidth: float | None = None, param_names: Sequence[str] | str | None = None) -> pathlib.Path:
    """
    Cluster the stable segments, search the sampled representatives and write the
    potential set.  `param_names` limits the search to a parameter subset.
    """
    params = ctx.rc.search(pop_size=pop_size, scale=scale, crossover_rate=crossover_rate, g_max=g_max, m=m,
                           bandwidth=bandwidth, params=param_names)
    with ctx.stage("search"):
        model, logset = _load_model_and_logs(ctx)
        segments = segment(logset, model.h)
        if not segments:
            raise NoSegmentsError(f"no flight in the LogSet has {model.h + 1} entries")
        embedded = embed_segments(segments, model.normalizer)
        bw = params.bandwidth or default_bandwidth(embedded, ctx.seed)
        clustering = meanshift_cluster(embedded, bw, max_fit=params.cluster_sample, seed=ctx.seed)
        picks = sample_representatives(clustering, params.m, ctx.seed)
        pset = run_search(model, [(i, segments[i]) for i in picks], ctx.table, params, ctx.seed,
                          progress=ctx.progress)
        pset.metadata.update({"bandwidth": float(bw), "clusters": len(clustering), "segments": len(segments)})
        write_potential_set(pset, ctx.table, ctx.path("potential"))
        ctx.produced("potential")
    return ctx.path("potential")


@dataclass(frozen=True)
class ValidationJob(MissionJob):
    """A mission job whose configuration is a potential configuration; `mode` says how it is flown."""
    mode: str = "mission"


def validation_jobs(ctx: RunContext, pset: PotentialSet, injection_time: float,
                    dt: float, duration_cap: float) -> list[ValidationJob]:
    """
    Pre-arm accepted configurations fly the mission from the start.  Rejected ones
    start on the defaults and are swapped in at `injection_time`, which is how a
    parameter change bypasses the pre-arm check in flight.
    """
    jobs = []
    defaults = default_configuration(ctx.table)
    for i, entry in enumerate(pset.entries):
        seed = derive_seed(ctx.seed, STREAM_VALIDATE, i)
        if prearm_check(entry.config, ctx.table).accepted:
            jobs.append(ValidationJob(index=i, config=entry.config, mission=ctx.mission, seed=seed, table=ctx.table,
                                      dt=dt, duration_cap=duration_cap, mode="mission"))
        else:
            jobs.append(ValidationJob(index=i, config=defaults, mission=ctx.mission, seed=seed, table=ctx.table,
                                      injection=Injection(time=injection_time, config=entry.config),
                                      dt=dt, duration_cap=duration_cap, mode="injection"))
    return jobs


def validate_flight(job: ValidationJob) -> ValidationRecord:
    trace = fly(job)
    injected = job.injection is not None
    config = job.injection.config if injected else job.config
    verdict = classify(trace, prearm_check(config, job.table), injected=injected)
    return ValidationRecord(config=config, verdict=verdict, mode=job.mode)


def cmd_validate(ctx: RunContext, injection_time: float | None = None) -> pathlib.Path:
    """Fly every potential configuration and write the verdicts, in potential set order."""
    settings = ctx.rc.validate(injection_time=injection_time)
    with ctx.stage("validate"):
        pset = read_potential_set(ctx.require("potential"), ctx.table)
        jobs = validation_jobs(ctx, pset, settings.injection_time, settings.dt, settings.duration_cap)
        records = LgdMissionPool(jobs=ctx.jobs, progress=ctx.progress).run(jobs, task=validate_flight,
                                                                            label="validation",
                                                                            describe=lambda r: r.verdict.label)
        write_records(records, ctx.table, ctx.path("records"))
        n_bad = sum(r.incorrect for r in records)
        lgd_logger.info("Validated %d configurations, %d incorrect", len(records), n_bad)
        ctx.produced("records")
    return ctx.path("records")


def cmd_guideline(ctx: RunContext, pop_size: int | None = None, generations: int | None = None,
                  grid_points: int | None = None,
                  param_names: Sequence[str] | str | None = None) -> list[RangeGuideline]:
    """Derive the range guideline front.  With `param_names` only those ranges are narrowed."""
    params = ctx.rc.guideline(pop_size=pop_size, generations=generations, grid_points=grid_points,
                              params=param_names)
    with ctx.stage("guideline"):
        records = read_records(ctx.require("records"), ctx.table)
        if not records:
            raise LgdException("no validation records to derive guidelines from")
        space = subset_table(ctx.table, params.params)
        if space is not ctx.table:
            records = [replace(r, config=project_configuration(r.config, ctx.table, space)) for r in records]
        front = pareto_optimize(records, space, params, ctx.seed, progress=ctx.progress)
        write_guideline_report(front, space, records, ctx.path("guidelines"))
        ctx.produced("guidelines")
    return front


def cmd_report(ctx: RunContext) -> ReportSummary:
    """
    Tally the validation records into report.csv and report.md.  Example guidelines are
    added when this run produced a front.
    """
    with ctx.stage("report"):
        records = read_records(ctx.require("records"), ctx.table)
        front: list[RangeGuideline] = []
        if "guidelines" in ctx.manifest.artifacts:
            front = read_guideline_report(ctx.require("guidelines"), ctx.table)
        summary = summarize(records, front)
        LgdDumpCSV(LgdDumpConfig.csv_default(output_file=str(ctx.path("report_csv")))).dump(summary)
        LgdDumpMarkdown(LgdDumpConfig.markdown_default(output_file=str(ctx.path("report_md")))).dump(summary)
        ctx.produced("report_csv", "report_md")
    return summary


def cmd_evaluate(ctx: RunContext, models: Sequence[StrOrPath] | None = None) -> pd.DataFrame:
    """
    Score one or more predictors against the validated configurations and write the
    step by step prediction of the first stable flight for the first model.
    """
    with ctx.stage("evaluate"):
        records = read_records(ctx.require("records"), ctx.table)
        logset = read_log(ctx.require("logs"))
        _check_logset(ctx, logset)
        labeled = [(r.config, r.incorrect) for r in records]
        paths = [pathlib.Path(p) for p in models] if models else [ctx.require("model")]

        rows = []
        for k, path in enumerate(paths):
            model = load_model(path)
            report = evaluate_classifier(model, segment(logset, model.h), labeled, ctx.seed)
            rows.append({"model": path.name, "h": model.h, "threshold": model.threshold,
                         "accuracy": report.accuracy, "precision": report.precision, "recall": report.recall,
                         "dc": report.dc, "di": report.di, "n": report.n})
            if k == 0 and len(logset):
                predict_series(model, logset.flights[0]).to_csv(ctx.path("prediction"), index=False,
                                                                float_format=FLOAT_FORMAT, lineterminator="\n")
        frame = pd.DataFrame(rows)
        frame.to_csv(ctx.path("evaluate"), index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        ctx.produced(*[n for n in ("evaluate", "prediction") if ctx.path(n).exists()])
    return frame


def run_all(ctx: RunContext, n_flights: int | None = None,
            param_names: Sequence[str] | str | None = None) -> ReportSummary:
    """genlogs, train, search, validate, guideline and report under one seed."""
    cmd_genlogs(ctx, n_flights=n_flights)
    cmd_train(ctx)
    cmd_search(ctx, param_names=param_names)
    records_path = cmd_validate(ctx)
    if read_records(records_path, ctx.table):
        cmd_guideline(ctx, param_names=param_names)
    else:
        lgd_logger.warning("No potential configurations were validated, skipping the guideline stage")
    return cmd_report(ctx)
