import json

import numpy as np
import pandas as pd
import pytest

import lgd.lgd_flightlog as flightlog
import lgd.lgd_pipeline as pipeline
from lgd.lgd_exception import ManifestError, ParamTableError
from lgd.lgd_flightlog import LogSet
from lgd.lgd_guideline import ValidationRecord, read_records
from lgd.lgd_mission import builtin_mission
from lgd.lgd_monitor import Evidence, Label, Verdict, prearm_check
from lgd.lgd_paramspec import COMPARISON_PARAMS, default_configuration, select_params, table_hash
from lgd.lgd_pipeline import (ARTIFACTS, DEFAULT_OUT_DIR, MANIFEST_FILE, OUT_ENV, RunContext, RunManifest,
                              ValidationJob, artifact_hash, cmd_evaluate, cmd_genlogs, cmd_guideline, cmd_report,
                              cmd_search, cmd_train, cmd_validate, resolve_out_dir, run_all, validation_jobs)
from lgd.lgd_search import PotentialEntry, PotentialSet, read_potential_set, write_potential_set
from lgd.lgd_simkernel import Injection
from lgd.lgd_util import STREAM_VALIDATE, derive_seed
from lgd.rc import LgdRC

SMALL_RC = {
    "campaign": {"n_flights": 8},
    "predictor": {"h": 2, "hidden_size": 4, "epochs": 2, "batch_size": 32},
    "search": {"pop_size": 6, "g_max": 3, "top_k": 2, "m": 1, "cluster_sample": 100},
    "guideline": {"pop_size": 8, "generations": 3},
}


def sine_flight(job):
    """Forty smooth entries whose phase comes from the job seed."""
    t = np.arange(40) * 0.04
    phase = (job.seed % 1000) / 1000.0
    return "Correct", t, np.column_stack([np.sin(t * (1 + k / 4) + phase) for k in range(12)])


def alternating_verdicts(job):
    """Odd jobs crash, even ones fly fine."""
    config = job.injection.config if job.injection is not None else job.config
    verdict = Verdict(label=Label.CORRECT)
    if job.index % 2:
        verdict = Verdict(label=Label.CRASH, evidence=Evidence(start=3.0, end=3.0, measured=4.0, threshold=2.0,
                                                               tag="impact"), detectors=("Crash",))
    return ValidationRecord(config=config, verdict=verdict, mode=job.mode)


@pytest.fixture
def fast_stages(monkeypatch):
    monkeypatch.delenv(OUT_ENV, raising=False)
    monkeypatch.setattr(flightlog, "_campaign_flight", sine_flight)
    monkeypatch.setattr(pipeline, "validate_flight", alternating_verdicts)


def small_context(out_dir, seed=5, **kwargs):
    return RunContext.create(out_dir=out_dir, seed=seed, rc=LgdRC(rc_d=SMALL_RC), **kwargs)


def test_resolve_out_dir(monkeypatch, tmp_path):
    monkeypatch.delenv(OUT_ENV, raising=False)
    rc = LgdRC(rc_d={"out_dir": "from_rc"})
    assert str(resolve_out_dir()) == DEFAULT_OUT_DIR
    assert str(resolve_out_dir(None, rc)) == "from_rc"
    assert str(resolve_out_dir("from_arg", rc)) == "from_arg"
    monkeypatch.setenv(OUT_ENV, str(tmp_path))
    assert resolve_out_dir("from_arg", rc) == tmp_path


def test_manifest_save_load(tmp_path):
    (tmp_path / "model.lgd").write_text("{}")
    manifest = RunManifest(seeds={"train": 3}, table_hash="abc", version="1.0")
    manifest.record("model", tmp_path, "model.lgd")
    manifest.timings["train"] = 1.5
    manifest.save(tmp_path)

    on_disk = json.loads((tmp_path / MANIFEST_FILE).read_text())
    assert "timings" not in on_disk
    again = RunManifest.load(tmp_path)
    assert again.artifacts == manifest.artifacts
    assert again.seeds == {"train": 3}
    assert again.timings == {"train": 1.5}
    assert RunManifest.load(tmp_path / "nothing_here") == RunManifest()


def test_manifest_corrupt(tmp_path):
    (tmp_path / MANIFEST_FILE).write_text("{broken")
    with pytest.raises(ManifestError):
        RunManifest.load(tmp_path)


def test_manifest_verify(tmp_path, table):
    (tmp_path / "model.lgd").write_text("{}")
    manifest = RunManifest(table_hash=table_hash(table))
    manifest.record("model", tmp_path, "model.lgd")
    assert manifest.verify("model", tmp_path, table) == tmp_path / "model.lgd"

    (tmp_path / ARTIFACTS["records"]).write_text("index\n")
    with pytest.raises(ManifestError, match="not recorded"):
        manifest.verify("records", tmp_path)

    with pytest.raises(ManifestError):
        manifest.verify("model", tmp_path, select_params(table, ["WPNAV_SPEED"]))

    (tmp_path / "model.lgd").write_text('{"changed": true}')
    with pytest.raises(ManifestError):
        manifest.verify("model", tmp_path)

    (tmp_path / "model.lgd").unlink()
    with pytest.raises(ManifestError):
        manifest.verify("model", tmp_path)


def test_artifact_hash_of_directory(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "a" / "x.csv").write_text("1\n")
    first = artifact_hash(tmp_path / "a")
    (tmp_path / "a" / "y.csv").write_text("2\n")
    assert artifact_hash(tmp_path / "a") != first


def test_context_precedence(monkeypatch, tmp_path):
    monkeypatch.delenv(OUT_ENV, raising=False)
    rc = LgdRC(rc_d={"seed": 7, "jobs": 3})
    ctx = RunContext.create(out_dir=tmp_path / "out", rc=rc)
    assert (ctx.seed, ctx.jobs) == (7, 3)
    assert ctx.out_dir.is_dir()
    ctx = RunContext.create(out_dir=tmp_path / "out", seed=0, jobs=1, rc=rc)
    assert (ctx.seed, ctx.jobs) == (0, 1)
    assert ctx.table.dim == 23
    assert len(ctx.mission.waypoints) > 0


def test_validation_jobs_inject_rejected_configs(fast_stages, tmp_path, table):
    ctx = small_context(tmp_path)
    accepted = default_configuration(table).with_values(table, WPNAV_SPEED=800.0)
    rejected = accepted.with_values(table, ATC_ANG_RLL_P=0.2)
    pset = PotentialSet(entries=[PotentialEntry(accepted, 1.0, 0), PotentialEntry(rejected, 2.0, 1)])
    jobs = validation_jobs(ctx, pset, injection_time=20.0, dt=0.0025, duration_cap=300.0)
    assert [j.mode for j in jobs] == ["mission", "injection"]
    assert jobs[0].config == accepted and jobs[0].injection is None
    assert jobs[1].config == default_configuration(table)
    assert jobs[1].injection.config == rejected
    assert jobs[1].injection.time == 20.0
    assert jobs[0].seed != jobs[1].seed


def test_stages_in_order(fast_stages, tmp_path):
    ctx = small_context(tmp_path / "run")
    cmd_genlogs(ctx)
    cmd_train(ctx)
    cmd_search(ctx)
    records_path = cmd_validate(ctx)
    records = read_records(records_path, ctx.table)
    assert records
    assert [r.incorrect for r in records] == [bool(i % 2) for i in range(len(records))]

    front = cmd_guideline(ctx)
    assert front
    summary = cmd_report(ctx)
    assert summary.potential == len(records)
    assert summary.examples
    frame = cmd_evaluate(ctx)
    assert list(frame["model"]) == ["model.lgd"]

    manifest = RunManifest.load(ctx.out_dir)
    assert set(manifest.artifacts) == set(ARTIFACTS)
    assert set(manifest.seeds.values()) == {5}
    assert set(manifest.timings) == {"genlogs", "train", "search", "validate", "guideline", "report", "evaluate"}
    assert manifest.table_hash == table_hash(ctx.table)
    for name in ARTIFACTS:
        ctx.require(name)


def test_stages_over_param_subset(fast_stages, tmp_path, table):
    ctx = small_context(tmp_path)
    cmd_genlogs(ctx)
    cmd_train(ctx)
    pset = read_potential_set(cmd_search(ctx, param_names="comparison"), ctx.table)
    assert pset.metadata["params"]["params"] == ["comparison"]
    assert pset.metadata["searched_params"] == select_params(table, COMPARISON_PARAMS).names
    defaults = default_configuration(table)
    for entry in pset:
        for name in table.names:
            if name not in COMPARISON_PARAMS:
                assert entry.config.value(table, name) == pytest.approx(defaults.value(table, name))

    cmd_validate(ctx)
    front = cmd_guideline(ctx, param_names=["ANGLE_MAX", "WPNAV_SPEED"])
    assert all(len(g.lower) == 2 for g in front)
    bounds = pd.read_csv(ctx.path("guidelines") / "guidelines.csv")
    assert set(bounds["param"]) == {"ANGLE_MAX", "WPNAV_SPEED"}
    summary = cmd_report(ctx)
    assert summary.examples


def test_stage_refuses_changed_input(fast_stages, tmp_path):
    ctx = small_context(tmp_path)
    cmd_genlogs(ctx)
    flight = next(p for p in ctx.path("logs").iterdir() if p.name.startswith("flight_"))
    flight.write_text(flight.read_text() + "\n")
    with pytest.raises(ManifestError):
        cmd_train(ctx)


def test_stage_refuses_other_table(fast_stages, tmp_path, table):
    cmd_genlogs(small_context(tmp_path))
    sub_csv = tmp_path / "sub.csv"
    sub_csv.write_text(select_params(table, ["WPNAV_SPEED", "ANGLE_MAX"]).to_csv_text())
    with pytest.raises(ManifestError):
        cmd_train(small_context(tmp_path, table=str(sub_csv)))


def test_logs_without_manifest_are_refused(fast_stages, tmp_path):
    cmd_genlogs(small_context(tmp_path))
    (tmp_path / MANIFEST_FILE).unlink()
    with pytest.raises(ManifestError, match="logs"):
        cmd_train(small_context(tmp_path))


def test_potential_set_placed_by_hand_is_refused(fast_stages, tmp_path, table):
    ctx = small_context(tmp_path)
    cmd_genlogs(ctx)
    cmd_train(ctx)
    pset = PotentialSet(entries=[PotentialEntry(default_configuration(table), 1.0, 0, (0,))])
    write_potential_set(pset, table, ctx.path("potential"))
    with pytest.raises(ManifestError, match="potential"):
        cmd_validate(ctx)
    assert not ctx.path("records").exists()


def test_logset_for_another_table_is_refused(table):
    ctx = RunContext(out_dir=None, table=table, mission=None)
    other = LogSet(param_names=["WPNAV_SPEED"])
    with pytest.raises(ParamTableError):
        pipeline._check_logset(ctx, other)


def test_run_all_is_reproducible(fast_stages, tmp_path):
    a = run_all(small_context(tmp_path / "a"))
    b = run_all(small_context(tmp_path / "b"))
    assert a == b
    assert (tmp_path / "a" / MANIFEST_FILE).read_text() == (tmp_path / "b" / MANIFEST_FILE).read_text()
    assert (tmp_path / "a" / "report.md").read_text() == (tmp_path / "b" / "report.md").read_text()


@pytest.mark.slow
def test_default_configuration_flies_builtin_mission_correctly(table):
    job = ValidationJob(index=0, config=default_configuration(table), mission=builtin_mission(),
                        seed=derive_seed(0, STREAM_VALIDATE, 0), table=table)
    record = pipeline.validate_flight(job)
    assert record.verdict.label == Label.CORRECT
    assert record.verdict.detectors == ()
    assert record.mode == "mission"


@pytest.mark.slow
def test_rejected_config_injected_mid_flight_is_unstable(table):
    defaults = default_configuration(table)
    weak = defaults.with_values(table, ATC_RAT_PIT_P=0.012)
    assert not prearm_check(weak, table).accepted
    job = ValidationJob(index=0, config=defaults, mission=builtin_mission(), seed=derive_seed(0, STREAM_VALIDATE, 0),
                        table=table, injection=Injection(time=20.0, config=weak), mode="injection")
    record = pipeline.validate_flight(job)
    assert record.config == weak
    assert record.incorrect
    assert record.verdict.label == Label.TACKLING
    assert record.verdict.detectors
    assert record.verdict.evidence is not None
