import itertools

import numpy as np
import pytest

from lgd.lgd_exception import LgdValueError, ParamTableError
from lgd.lgd_guideline import (RangeGuideline, ValidationRecord, covered, coverage_summary, crowding_distance,
                               dominates, nondominated_sort, objectives, pareto_optimize, polynomial_mutation,
                               read_guideline_report, read_records, repair, sbx_crossover, select_guideline, snap,
                               write_guideline_report, write_records)
from lgd.lgd_monitor import Evidence, Label, Verdict
from lgd.lgd_paramspec import Configuration, denormalize_array, select_params
from lgd.lgd_settings import GuidelineParams

GRID = 11
CORRECT = Verdict(label=Label.CORRECT)


def crash(tag="impact"):
    return Verdict(label=Label.CRASH, evidence=Evidence(start=12.5, end=12.5, measured=4.25, threshold=2.0, tag=tag),
                   detectors=("Crash",))


@pytest.fixture(scope="module")
def sub(table):
    return select_params(table, ["WPNAV_SPEED", "ANGLE_MAX"])


@pytest.fixture(scope="module")
def units():
    """Twelve correct points in the lower left and two incorrect ones further right."""
    good = [(a, b) for a in (0.05, 0.15, 0.25, 0.35) for b in (0.05, 0.15, 0.25)]
    return np.array(good + [(0.85, 0.05), (0.95, 0.95)]), np.array([False] * 12 + [True, True])


@pytest.fixture(scope="module")
def records(sub, units):
    points, bad = units
    values = denormalize_array(points, sub)
    return [ValidationRecord(config=Configuration.from_array(v), verdict=crash() if b else CORRECT)
            for v, b in zip(values, bad)]


def brute_force_front(points, bad):
    """Objective pairs of every grid box, reduced to the non-dominated ones."""
    grid = np.linspace(0.0, 1.0, GRID)
    intervals = [(lo, hi) for lo, hi in itertools.combinations(grid, 2)]
    scores = set()
    for (l1, h1), (l2, h2) in itertools.product(intervals, repeat=2):
        mask = (points[:, 0] >= l1) & (points[:, 0] <= h1) & (points[:, 1] >= l2) & (points[:, 1] <= h2)
        n, n_bad = int(mask.sum()), int((mask & bad).sum())
        scores.add((n_bad / n, n) if n else (1.0, 0))
    return sorted(s for s in scores if not any(dominates(o, s) for o in scores))


def test_dominates():
    assert dominates((0.1, 10), (0.2, 10))
    assert dominates((0.1, 11), (0.1, 10))
    assert not dominates((0.1, 10), (0.1, 10))
    assert not dominates((0.0, 5), (0.1, 10))


def test_covered_is_inclusive():
    assert covered([0.0, 0.0], [1.0, 1.0], [1.0, 0.0])
    assert not covered([0.0, 0.0], [1.0, 1.0], [1.0, 1.5])
    assert covered([0.0], [1.0], [[0.5], [2.0]]).tolist() == [True, False]


def test_objectives(sub, records):
    assert objectives(sub.lower, sub.upper, records) == (2 / 14, 14)
    assert objectives(sub.lower, sub.lower, records) == (1.0, 0)
    assert objectives(sub.lower, sub.upper, []) == (1.0, 0)


def test_nondominated_sort_and_crowding():
    objs = np.array([[1.0, 2.0], [2.0, 1.0], [0.0, 3.0], [2.0, 2.0], [3.0, 3.0]])
    fronts = nondominated_sort(objs)
    assert fronts == [[0, 1, 2], [3], [4]]
    dist = crowding_distance(fronts[0], objs)
    assert dist[0] == pytest.approx(2.0)
    assert np.isinf(dist[1]) and np.isinf(dist[2])
    assert np.all(np.isinf(crowding_distance([3, 4], objs)))


def test_variation_stays_in_box(rng):
    for _ in range(20):
        p1, p2 = rng.random(6), rng.random(6)
        c1, c2 = sbx_crossover(p1, p2, 15.0, rng)
        mutated = polynomial_mutation(c1, 20.0, 1.0, rng)
        for child in (c1, c2, mutated):
            assert np.all((child >= 0.0) & (child <= 1.0))


def test_snap():
    assert snap(np.array([0.33, 0.96]), GRID).tolist() == pytest.approx([0.3, 1.0])
    z = np.array([0.33, 0.96])
    assert snap(z, None) is z


@pytest.mark.parametrize("z, expected", [
    ([0.8, 0.2, 0.1, 0.5], [0.1, 0.2, 0.8, 0.5]),
    ([0.3, 0.5, 0.3, 0.9], [0.3, 0.5, 0.4, 0.9]),
    ([1.0, 0.0, 1.0, 0.2], [0.9, 0.0, 1.0, 0.2]),
    ([0.33, -0.2, 0.71, 1.3], [0.3, 0.0, 0.7, 1.0]),
])
def test_repair_on_grid(z, expected):
    assert repair(np.array(z), GRID) == pytest.approx(expected)


def test_repair_without_grid():
    fixed = repair(np.array([0.4, 0.4]))
    assert fixed[0] < fixed[1]
    assert fixed[1] - fixed[0] == pytest.approx(1e-6)


def test_pareto_front_matches_brute_force(sub, records, units):
    params = GuidelineParams(pop_size=80, generations=150, grid_points=GRID)
    front = pareto_optimize(records, sub, params, seed=0)
    expected = brute_force_front(*units)
    assert [(g.f1, g.f2) for g in front] == [pytest.approx(e) for e in sorted(expected, key=lambda s: s[1])]

    # Three steps: the clean corner, one extra incorrect, everything.
    assert [g.f2 for g in front] == [12, 13, 14]
    for g in front:
        assert objectives(g.lower, g.upper, records) == (pytest.approx(g.f1), g.f2)
        assert np.all(np.array(g.lower) >= sub.lower) and np.all(np.array(g.upper) <= sub.upper)
        assert np.all(np.array(g.lower) < np.array(g.upper))
    assert front[0].covered_incorrect == 0
    assert front[-1].reduction == pytest.approx((0.0, 0.0))


def test_pareto_front_without_grid(sub, records):
    front = pareto_optimize(records, sub, GuidelineParams(pop_size=20, generations=15), seed=1)
    keys = [(g.f1, g.f2) for g in front]
    assert not any(dominates(a, b) for a in keys for b in keys)
    assert [g.f2 for g in front] == sorted(g.f2 for g in front)
    # The full range is always evaluated, and nothing else covers every record.
    assert keys[-1] == (2 / 14, 14)


def test_pareto_is_seeded(sub, records):
    params = GuidelineParams(pop_size=12, generations=8)
    assert pareto_optimize(records, sub, params, seed=3) == pareto_optimize(records, sub, params, seed=3)


def test_pareto_argument_checks(table, sub, records):
    with pytest.raises(LgdValueError):
        pareto_optimize([], sub)
    with pytest.raises(LgdValueError):
        pareto_optimize(records, table, GuidelineParams(pop_size=4, generations=1))


def guideline(f1, f2, bad=0):
    return RangeGuideline(lower=(0.0,), upper=(1.0,), f1=f1, f2=f2, covered_incorrect=bad, reduction=(0.0,))


def test_select_guideline():
    front = [guideline(0.0, 5), guideline(0.2, 9, 2), guideline(0.6, 12, 7)]
    assert select_guideline(front, 0.5) is front[1]
    assert select_guideline(front, 1.0) is front[2]
    assert select_guideline(front, 0.0) is front[0]
    assert select_guideline(front[1:], 0.1) is None
    assert guideline(0.2, 9, 2).covered_correct == 7


def test_coverage_summary(sub, records):
    full = RangeGuideline(lower=tuple(sub.lower), upper=tuple(sub.upper), f1=2 / 14, f2=14, covered_incorrect=2,
                          reduction=(0.0, 0.0))
    assert coverage_summary(full, records) == {"I": 2, "C": 12, "V": 14,
                                               "I_ratio": 1.0, "C_ratio": 1.0, "V_ratio": 1.0}
    half = denormalize_array(np.array([0.5, 0.5]), sub)
    corner = RangeGuideline(lower=tuple(sub.lower), upper=tuple(half), f1=0.0, f2=12, covered_incorrect=0,
                            reduction=(0.5, 0.5))
    summary = coverage_summary(corner, records)
    assert (summary["I"], summary["C"], summary["V"]) == (0, 12, 12)
    assert summary["V_ratio"] == pytest.approx(12 / 14)


def test_records_file_exact(sub, records, tmp_path):
    mixed = records[:3] + [ValidationRecord(config=records[-1].config, verdict=crash("attitude"), mode="injection")]
    path = tmp_path / "records.csv"
    write_records(mixed, sub, path)
    assert read_records(path, sub) == mixed


def test_records_file_errors(sub, table, records, tmp_path):
    with pytest.raises(ParamTableError):
        read_records(tmp_path / "missing.csv", sub)
    path = tmp_path / "records.csv"
    write_records(records, sub, path)
    with pytest.raises(ParamTableError):
        read_records(path, table)


def test_guideline_report_files(sub, table, records, tmp_path):
    front = pareto_optimize(records, sub, GuidelineParams(pop_size=20, generations=10, grid_points=GRID), seed=0)
    paths = write_guideline_report(front, sub, records, tmp_path / "guide")
    assert sorted(p.name for p in paths.values()) == ["front.csv", "front_plot.csv", "guidelines.csv"]
    assert paths["front_plot"].read_text().splitlines()[0] == "f2,f1"
    assert len(paths["guidelines"].read_text().splitlines()) == 1 + 2 * len(front)
    assert read_guideline_report(tmp_path / "guide", sub) == front
    # The full table resolves the subset the report was written over.
    assert read_guideline_report(tmp_path / "guide", table) == front

    with pytest.raises(ParamTableError):
        read_guideline_report(tmp_path / "nowhere", sub)


def test_guideline_report_with_unknown_param(sub, table, records, tmp_path):
    front = pareto_optimize(records, sub, GuidelineParams(pop_size=8, generations=2), seed=0)
    paths = write_guideline_report(front, sub, records, tmp_path / "guide")
    text = paths["guidelines"].read_text().replace("ANGLE_MAX", "NOT_A_PARAM")
    paths["guidelines"].write_text(text)
    with pytest.raises(ParamTableError):
        read_guideline_report(tmp_path / "guide", table)
