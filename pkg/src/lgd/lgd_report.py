"""
Validation summary: verdict counts, the true-positive ratio of the potential set and a
pair of example guidelines picked from the Pareto front.
"""
from dataclasses import dataclass, field
from typing import Sequence

from .lgd_guideline import RangeGuideline, ValidationRecord, select_guideline
from .lgd_monitor import Label

BALANCED_MAX_F1 = 0.5


@dataclass(frozen=True)
class VerdictCount:
    verdict: str
    count: int
    ratio: float


@dataclass(frozen=True)
class GuidelineExample:
    kind: str
    guideline_id: int
    f1: float
    f2: int


@dataclass(frozen=True)
class ReportSummary:
    """
    `potential` is the number of validated potential configurations (one record each),
    `incorrect` how many of them ended in an unstable verdict.
    """
    potential: int
    incorrect: int
    tackling_runs: int
    verdicts: list[VerdictCount] = field(default_factory=list)
    examples: list[GuidelineExample] = field(default_factory=list)

    @property
    def tp_ratio(self) -> float:
        return self.incorrect / self.potential if self.potential else 0.0

    @property
    def correct(self) -> int:
        return self.potential - self.incorrect


def summarize(records: Sequence[ValidationRecord],
              front: Sequence[RangeGuideline] | None = None) -> ReportSummary:
    """
    Tally verdicts in a fixed label order.  With a front, the examples are the guideline
    with the lowest incorrect ratio and the widest one with f1 at most BALANCED_MAX_F1.
    """
    total = len(records)
    counts = {label: 0 for label in Label}
    for r in records:
        counts[r.verdict.label] += 1
    verdicts = [VerdictCount(label.value, n, n / total if total else 0.0) for label, n in counts.items()]

    examples: list[GuidelineExample] = []
    front = list(front or [])
    if front:
        lowest = min(range(len(front)), key=lambda i: (front[i].f1, -front[i].f2))
        examples.append(GuidelineExample("lowest_incorrect_ratio", lowest, front[lowest].f1, front[lowest].f2))
        balanced = select_guideline(front, BALANCED_MAX_F1)
        if balanced is not None:
            gid = front.index(balanced)
            examples.append(GuidelineExample("balanced", gid, balanced.f1, balanced.f2))

    return ReportSummary(potential=total,
                         incorrect=total - counts[Label.CORRECT],
                         tackling_runs=sum(1 for r in records if r.mode == "injection"),
                         verdicts=verdicts,
                         examples=examples)
