"""Pairwise preference aggregation: ground truth, outliers, correlation.

Pipeline: collect per-annotator left/right choices for method pairs,
majority-vote a first ground truth, drop annotators whose agreement with
it falls below the threshold, recompute the ground truth once from the
remainder, then score how often each IQA metric picks the same winner.
"""

from __future__ import annotations

import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .iqa import Preference

LEFT = "left"
RIGHT = "right"
_CHOICES = (LEFT, RIGHT)

DEFAULT_THRESHOLD = 0.70


@dataclass(frozen=True)
class PairRecord:
    pair_id: str
    image_id: str
    method_left: str
    method_right: str

    def __post_init__(self) -> None:
        if self.method_left == self.method_right:
            raise ValueError(f"pair {self.pair_id}: identical methods on both sides")

    def method_of(self, choice: str) -> str:
        if choice == LEFT:
            return self.method_left
        if choice == RIGHT:
            return self.method_right
        raise ValueError(f"choice must be left or right, got {choice!r}")

    def swapped(self) -> "PairRecord":
        return PairRecord(self.pair_id, self.image_id, self.method_right, self.method_left)


@dataclass(frozen=True)
class ChoiceEvent:
    annotator: str
    pair_id: str
    choice: str
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        if self.choice not in _CHOICES:
            raise ValueError(f"choice must be left or right, got {self.choice!r}")


@dataclass(frozen=True)
class GroundTruth:
    """Per-pair winning method (None = no consensus) for one vote step."""

    step: int
    preferred: Mapping[str, str | None]

    def consensus_pairs(self) -> list[str]:
        return [pid for pid, m in self.preferred.items() if m is not None]


@dataclass(frozen=True)
class MetricCorrelation:
    metric: str
    agreement: float
    matches: int
    counted: int
    excluded: int


@dataclass(frozen=True)
class StudyResult:
    gt_step1: GroundTruth
    gt_step2: GroundTruth
    outliers: frozenset[str]
    agreements: Mapping[str, float | None]


def generate_pairs(
    image_ids: Sequence[str], method_ids: Sequence[str], seed: int
) -> list[PairRecord]:
    """All method pairs per image, in seeded random order and orientation."""
    if len(set(image_ids)) != len(image_ids):
        raise ValueError("duplicate image ids")
    if len(set(method_ids)) != len(method_ids):
        raise ValueError("duplicate method ids")
    if len(method_ids) < 2:
        raise ValueError(f"need at least 2 methods, got {len(method_ids)}")
    rng = random.Random(f"pairgen:{seed}")
    oriented = []
    for image in image_ids:
        for m1, m2 in combinations(method_ids, 2):
            if rng.random() < 0.5:
                m1, m2 = m2, m1
            oriented.append((image, m1, m2))
    rng.shuffle(oriented)
    return [
        PairRecord(f"p{i:05d}", image, left, right)
        for i, (image, left, right) in enumerate(oriented)
    ]


def pairs_by_id(pairs: Iterable[PairRecord]) -> dict[str, PairRecord]:
    index: dict[str, PairRecord] = {}
    for p in pairs:
        if p.pair_id in index:
            raise ValueError(f"duplicate pair id {p.pair_id}")
        index[p.pair_id] = p
    return index


def filter_pairs_by_method(pairs: Iterable[PairRecord], method: str) -> list[PairRecord]:
    """Pairs in which the given method appears on either side."""
    return [p for p in pairs if method in (p.method_left, p.method_right)]


def _check_events(events: Sequence[ChoiceEvent], index: Mapping[str, PairRecord]) -> None:
    seen: set[tuple[str, str]] = set()
    for ev in events:
        if ev.pair_id not in index:
            raise ValueError(f"event references unknown pair {ev.pair_id}")
        key = (ev.annotator, ev.pair_id)
        if key in seen:
            raise ValueError(f"duplicate choice by {ev.annotator} for pair {ev.pair_id}")
        seen.add(key)


def majority_vote(
    record: PairRecord,
    events: Iterable[ChoiceEvent],
    excluded: frozenset[str] | set[str] = frozenset(),
) -> str | None:
    """Strict-majority winner among non-excluded choices; ties are None."""
    counts: Counter[str] = Counter()
    for ev in events:
        if ev.pair_id != record.pair_id or ev.annotator in excluded:
            continue
        counts[record.method_of(ev.choice)] += 1
    left = counts.get(record.method_left, 0)
    right = counts.get(record.method_right, 0)
    if left > right:
        return record.method_left
    if right > left:
        return record.method_right
    return None


def _vote_all(
    pairs: Sequence[PairRecord],
    events_by_pair: Mapping[str, list[ChoiceEvent]],
    excluded: frozenset[str],
    step: int,
) -> GroundTruth:
    preferred = {
        p.pair_id: majority_vote(p, events_by_pair.get(p.pair_id, ()), excluded)
        for p in pairs
    }
    return GroundTruth(step=step, preferred=preferred)


def annotator_agreement(
    events: Sequence[ChoiceEvent],
    pairs: Iterable[PairRecord] | Mapping[str, PairRecord],
    gt: GroundTruth,
) -> float:
    """Fraction of this annotator's consensus-pair choices matching the GT."""
    index = pairs if isinstance(pairs, Mapping) else pairs_by_id(pairs)
    matches = 0
    eligible = 0
    for ev in events:
        winner = gt.preferred.get(ev.pair_id)
        if winner is None:
            continue
        eligible += 1
        if index[ev.pair_id].method_of(ev.choice) == winner:
            matches += 1
    if eligible == 0:
        raise ValueError("no eligible pairs: annotator has no consensus-GT labels")
    return matches / eligible


def run_study(
    pairs: Sequence[PairRecord],
    events: Sequence[ChoiceEvent],
    threshold: float = DEFAULT_THRESHOLD,
) -> StudyResult:
    """Two-step ground truth with one round of outlier-annotator removal.

    Annotators strictly below the agreement threshold against the step-1
    ground truth are dropped; agreement exactly at the threshold survives.
    Annotators with no consensus-pair labels cannot be classified and are
    retained.
    """
    index = pairs_by_id(pairs)
    _check_events(events, index)
    by_annotator: dict[str, list[ChoiceEvent]] = defaultdict(list)
    by_pair: dict[str, list[ChoiceEvent]] = defaultdict(list)
    for ev in events:
        by_annotator[ev.annotator].append(ev)
        by_pair[ev.pair_id].append(ev)
    if not by_annotator:
        raise ValueError("no annotators in event set")

    gt1 = _vote_all(pairs, by_pair, frozenset(), step=1)
    agreements: dict[str, float | None] = {}
    outliers: set[str] = set()
    for annotator, evs in by_annotator.items():
        try:
            frac = annotator_agreement(evs, index, gt1)
        except ValueError:
            agreements[annotator] = None
            continue
        agreements[annotator] = frac
        if frac < threshold:
            outliers.add(annotator)
    if len(outliers) == len(by_annotator):
        raise ValueError("no annotators survive threshold")

    gt2 = _vote_all(pairs, by_pair, frozenset(outliers), step=2)
    return StudyResult(
        gt_step1=gt1,
        gt_step2=gt2,
        outliers=frozenset(outliers),
        agreements=agreements,
    )


def metric_hvs_correlation(
    metric_prefs: Mapping[str, Mapping[str, Preference]],
    pairs: Sequence[PairRecord],
    gt: GroundTruth,
) -> dict[str, MetricCorrelation]:
    """Agreement of each metric's pairwise preference with the ground truth.

    Pairs with no consensus, and pairs the metric ties on, are excluded
    from the agreement fraction but reported in the excluded count.
    """
    index = pairs_by_id(pairs)
    reports: dict[str, MetricCorrelation] = {}
    for metric, prefs in metric_prefs.items():
        for pid in prefs:
            if pid not in index:
                raise ValueError(f"metric {metric} references unknown pair {pid}")
        matches = 0
        counted = 0
        excluded = 0
        for p in pairs:
            winner = gt.preferred.get(p.pair_id)
            if winner is None:
                excluded += 1
                continue
            if p.pair_id not in prefs:
                raise ValueError(
                    f"metric {metric} has no preference for consensus pair {p.pair_id}"
                )
            pref = prefs[p.pair_id]
            if pref is Preference.TIE:
                excluded += 1
                continue
            counted += 1
            if p.method_of(pref.value) == winner:
                matches += 1
        agreement = matches / counted if counted else 0.0
        reports[metric] = MetricCorrelation(
            metric=metric,
            agreement=agreement,
            matches=matches,
            counted=counted,
            excluded=excluded,
        )
    return reports


def preference_counts(pairs: Sequence[PairRecord], gt: GroundTruth) -> dict[str, int]:
    """How many consensus pairs each method wins; methods never preferred get 0."""
    counts: dict[str, int] = {}
    for p in pairs:
        counts.setdefault(p.method_left, 0)
        counts.setdefault(p.method_right, 0)
    for p in pairs:
        winner = gt.preferred.get(p.pair_id)
        if winner is not None:
            counts[winner] += 1
    return counts
