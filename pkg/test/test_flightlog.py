import json

import numpy as np
import pytest

import lgd.lgd_flightlog as flightlog
from lgd.lgd_exception import CampaignFailedError, LgdValueError, LogFormatError
from lgd.lgd_flightlog import (LOG_COLUMNS, Context, FlightLog, LogSet, generate_campaign, read_log,
                               sample_campaign_configuration, segment, split_flights, write_log)
from lgd.lgd_paramspec import default_configuration, normalize
from lgd.lgd_settings import CampaignSettings


def make_flight(flight_id, n, table, rng):
    times = np.arange(n) * 0.04
    return FlightLog(flight_id=flight_id, config=default_configuration(table), times=times,
                     contexts=rng.normal(size=(n, 12)))


@pytest.fixture
def logset(table, rng):
    flights = [make_flight(i, 10 + i, table, rng) for i in range(5)]
    return LogSet(param_names=list(table.names), flights=flights, metadata={"seed": 3})


def test_logset_basics(logset):
    assert len(logset) == 5
    assert logset.total_entries == 10 + 11 + 12 + 13 + 14
    assert set(logset.config_manifest) == {0, 1, 2, 3, 4}
    assert logset.flight(2).flight_id == 2
    with pytest.raises(KeyError):
        logset.flight(99)


def test_entries_and_frame(logset):
    flight = logset.flight(0)
    entries = list(flight.entries())
    assert len(entries) == 10
    assert entries[3].timestamp == pytest.approx(0.12)
    assert entries[3].state.roll == flight.contexts[3, 0]
    assert entries[3].sensors.accel_z == flight.contexts[3, 11]
    assert entries[3].config_id == 0
    assert list(flight.frame().columns) == LOG_COLUMNS


def test_context_array():
    values = np.arange(12.0)
    ctx = Context.from_array(values)
    assert ctx.state.yaw == 2.0
    assert ctx.sensors.gyro_x == 6.0
    assert np.array_equal(ctx.as_array(), values)


def test_write_read_exact(logset, tmp_path):
    write_log(logset, tmp_path / "logs")
    again = read_log(tmp_path / "logs")
    assert again == logset
    assert again.metadata == {"seed": 3}
    assert sorted(p.name for p in (tmp_path / "logs").iterdir()) == \
        ["flight_0.csv", "flight_1.csv", "flight_2.csv", "flight_3.csv", "flight_4.csv", "manifest.json"]


def test_read_missing_manifest(tmp_path):
    with pytest.raises(LogFormatError):
        read_log(tmp_path)


def test_read_corrupt_manifest(tmp_path):
    (tmp_path / "manifest.json").write_text("{nope")
    with pytest.raises(LogFormatError):
        read_log(tmp_path)


def test_read_wrong_version(logset, tmp_path):
    write_log(logset, tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    manifest["format_version"] = 99
    (tmp_path / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(LogFormatError):
        read_log(tmp_path)


def test_read_truncated_flight(logset, tmp_path):
    write_log(logset, tmp_path)
    path = tmp_path / "flight_1.csv"
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-2]) + "\n")
    with pytest.raises(LogFormatError):
        read_log(tmp_path)


def test_read_wrong_columns(logset, tmp_path):
    write_log(logset, tmp_path)
    path = tmp_path / "flight_0.csv"
    lines = path.read_text().splitlines()
    lines[0] = lines[0].replace("roll_rate", "p")
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(LogFormatError):
        read_log(tmp_path)


def test_read_missing_flight(logset, tmp_path):
    write_log(logset, tmp_path)
    (tmp_path / "flight_4.csv").unlink()
    with pytest.raises(LogFormatError):
        read_log(tmp_path)


def test_segment_windows(logset):
    segments = segment(LogSet(param_names=logset.param_names, flights=[logset.flight(0)]), h=2)
    # 10 entries give windows at 0, 3 and 6; entry 9 is dropped.
    assert [s.start for s in segments] == [0, 3, 6]
    assert all(len(s) == 3 and s.h == 2 for s in segments)
    assert np.array_equal(segments[1].contexts, logset.flight(0).contexts[3:6])
    assert segments[1].context(0).state.roll == logset.flight(0).contexts[3, 0]


def test_segment_counts(logset):
    segments = segment(logset, h=4)
    assert len(segments) == sum(len(f) // 5 for f in logset)
    assert {s.flight_id for s in segments} == {0, 1, 2, 3, 4}


def test_segment_short_flight(table, rng):
    short = LogSet(param_names=list(table.names), flights=[make_flight(0, 3, table, rng)])
    assert segment(short, h=4) == []
    with pytest.raises(LgdValueError):
        segment(short, h=0)


def test_split_flights(logset):
    train, hold = split_flights(logset, 0.4, seed=1)
    assert len(train) == 3
    assert len(hold) == 2
    ids = {f.flight_id for f in train} | {f.flight_id for f in hold}
    assert ids == {0, 1, 2, 3, 4}
    again_train, _ = split_flights(logset, 0.4, seed=1)
    assert [f.flight_id for f in again_train] == [f.flight_id for f in train]


def test_split_edge_cases(logset, table, rng):
    train, hold = split_flights(logset, 0.0, seed=1)
    assert len(train) == 5 and len(hold) == 0
    # Never hold out every flight.
    train, hold = split_flights(logset, 0.99, seed=1)
    assert len(train) == 1 and len(hold) == 4
    single = LogSet(param_names=logset.param_names, flights=[make_flight(0, 5, table, rng)])
    train, hold = split_flights(single, 0.5, seed=1)
    assert len(train) == 1 and len(hold) == 0
    with pytest.raises(LgdValueError):
        split_flights(logset, 1.0, seed=1)


def test_sample_campaign_configuration(table, rng):
    for _ in range(50):
        unit = normalize(sample_campaign_configuration(table, rng, 0.15), table)
        assert np.all((unit >= 0.0) & (unit <= 1.0))
    with pytest.raises(LgdValueError):
        sample_campaign_configuration(table, rng, 0.0)


def fake_flight(job):
    """Stand-in for a simulated flight: five entries derived from the job seed."""
    rng = np.random.default_rng(job.seed)
    return "Correct", np.arange(5) * 0.04, rng.normal(size=(5, 12))


def crash_flight(job):
    return "Crash", np.arange(5) * 0.04, np.zeros((5, 12))


def test_campaign_is_seeded(monkeypatch, table, short_mission):
    monkeypatch.setattr(flightlog, "_campaign_flight", fake_flight)
    a = generate_campaign(table, 12, short_mission, seed=4)
    b = generate_campaign(table, 12, short_mission, seed=4)
    c = generate_campaign(table, 12, short_mission, seed=5)
    assert a == b
    assert a != c
    # Flight 0 always flies the defaults.
    assert a.flight(0).config == default_configuration(table)
    assert a.metadata["seed"] == 4
    assert a.metadata["n_attempted"] == 12
    kept = len(a) + sum(a.metadata["discarded"].values())
    assert kept == 12


def test_campaign_fails_below_minimum(monkeypatch, table, short_mission):
    monkeypatch.setattr(flightlog, "_campaign_flight", crash_flight)
    with pytest.raises(CampaignFailedError) as info:
        generate_campaign(table, 5, short_mission, seed=0)
    assert info.value.retained == 0
    assert info.value.total == 5


def test_campaign_bad_count(table, short_mission):
    with pytest.raises(LgdValueError):
        generate_campaign(table, 0, short_mission, seed=0)


@pytest.mark.slow
def test_simulated_campaign(table, short_mission):
    settings = CampaignSettings(n_flights=3, duration_cap=3.0)
    logset = generate_campaign(table, 3, short_mission, seed=2, settings=settings)
    assert 0 in logset.config_manifest
    flight = logset.flight(0)
    assert len(flight) == 76
    assert flight.contexts.shape == (76, 12)
