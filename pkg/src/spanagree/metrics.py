"""Similarity metrics between two annotation campaigns.

Per example, both-non-empty pairs get overlap-based precision/recall/F1
(hard requires matching categories, soft ignores them) plus the
alignment-based chance-corrected score; pairs where either side is
empty get the empty-agreement score instead. Count correlation runs
over all examples. Aggregates are unweighted means over the examples
where each metric is defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .gamma import GammaConfig, gamma_score
from .model import Campaign, Dataset, SpanAnnotation


class MatchMode(str, Enum):
    HARD = "hard"
    SOFT = "soft"


class MetricError(ValueError):
    pass


class EmptyCandidate(MetricError):
    """Precision is undefined for an empty candidate set."""


class EmptyReference(MetricError):
    """Recall is undefined for an empty reference set."""


class NotApplicable(MetricError):
    """The empty-agreement score only applies when a side is empty."""


class DegenerateVariance(MetricError):
    """Correlation is undefined when either count vector is constant."""


class ExampleIdMismatch(MetricError):
    """The two campaigns do not cover the same example ids."""


def char_overlap(a: SpanAnnotation, b: SpanAnnotation) -> int:
    """Number of character positions the two spans share."""
    return max(0, min(a.end, b.end) - max(a.start, b.start))


def _compatible(a: SpanAnnotation, b: SpanAnnotation, mode: MatchMode) -> bool:
    return mode is MatchMode.SOFT or a.category == b.category


def example_precision(
    candidate: Iterable[SpanAnnotation],
    reference: Iterable[SpanAnnotation],
    mode: MatchMode = MatchMode.HARD,
) -> float:
    """Mean per-annotation overlap credit of the candidate spans.

    Each candidate span earns overlap/length against every compatible
    reference span, clamped at 1 so mutually overlapping references
    cannot push credit past full.
    """
    cand = tuple(candidate)
    ref = tuple(reference)
    if not cand:
        raise EmptyCandidate("precision undefined for an empty candidate set")
    total = 0.0
    for a in cand:
        credit = 0.0
        for g in ref:
            if _compatible(a, g, mode):
                credit += char_overlap(a, g) / len(a)
        total += min(1.0, credit)
    return total / len(cand)


def example_recall(
    candidate: Iterable[SpanAnnotation],
    reference: Iterable[SpanAnnotation],
    mode: MatchMode = MatchMode.HARD,
) -> float:
    """Coverage of the reference spans: precision with roles swapped."""
    ref = tuple(reference)
    if not ref:
        raise EmptyReference("recall undefined for an empty reference set")
    return example_precision(ref, candidate, mode)


def example_f1(
    candidate: Iterable[SpanAnnotation],
    reference: Iterable[SpanAnnotation],
    mode: MatchMode = MatchMode.HARD,
) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    p = example_precision(candidate, reference, mode)
    r = example_recall(candidate, reference, mode)
    return _harmonic(p, r)


def _harmonic(p: float, r: float) -> float:
    return 0.0 if p + r == 0.0 else 2.0 * p * r / (p + r)


def pearson_counts(counts1: Sequence[float], counts2: Sequence[float]) -> float:
    """Sample correlation between per-example annotation counts."""
    if len(counts1) != len(counts2):
        raise MetricError(
            f"count vectors differ in length: {len(counts1)} vs {len(counts2)}"
        )
    n = len(counts1)
    if n < 2:
        raise DegenerateVariance("need at least two examples for a correlation")
    mean1 = sum(counts1) / n
    mean2 = sum(counts2) / n
    num = 0.0
    var1 = 0.0
    var2 = 0.0
    for x, y in zip(counts1, counts2):
        dx = x - mean1
        dy = y - mean2
        num += dx * dy
        var1 += dx * dx
        var2 += dy * dy
    if var1 == 0.0 or var2 == 0.0:
        raise DegenerateVariance("constant count vector; correlation undefined")
    return num / math.sqrt(var1 * var2)


def s_empty(
    candidate: Iterable[SpanAnnotation], reference: Iterable[SpanAnnotation]
) -> float:
    """Agreement score for examples where an annotator produced nothing.

    1/(1 + n) with n the non-empty side's annotation count; 1.0 when
    both sides are empty (both agree there was nothing to mark).
    """
    cand = tuple(candidate)
    ref = tuple(reference)
    if cand and ref:
        raise NotApplicable("both sets are non-empty; use the overlap metrics")
    if not cand and not ref:
        return 1.0
    return 1.0 / (1.0 + (len(cand) or len(ref)))


@dataclass(frozen=True)
class ExampleScores:
    """Per-example metric values; exactly one of the F1 family and the
    empty-agreement score is populated, depending on the routing."""

    example_id: str
    n_reference: int
    n_candidate: int
    status: str  # "scored" | "s_empty" | "failed"
    precision_hard: float | None = None
    recall_hard: float | None = None
    f1_hard: float | None = None
    precision_soft: float | None = None
    recall_soft: float | None = None
    f1_soft: float | None = None
    s_empty: float | None = None
    gamma: float | None = None


@dataclass(frozen=True)
class ScoreReport:
    """Aggregate agreement between a candidate and a reference campaign."""

    reference_id: str
    candidate_id: str
    n_examples: int
    n_scored: int
    n_empty_scored: int
    n_failed: int
    n_gamma_scored: int
    n_gamma_skipped: int
    pearson: float | None
    precision_hard: float | None
    recall_hard: float | None
    f1_hard: float | None
    precision_soft: float | None
    recall_soft: float | None
    f1_soft: float | None
    f1_delta: float | None
    gamma: float | None
    s_empty: float | None
    gamma_config: GammaConfig
    examples: tuple[ExampleScores, ...] = field(repr=False, default=())


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def aggregate(
    dataset: Dataset,
    reference: Campaign,
    candidate: Campaign,
    gamma_config: GammaConfig | None = None,
) -> ScoreReport:
    """Score a candidate campaign against a reference over one dataset.

    Both campaigns must cover the same example ids. Examples flagged
    failed on either side are excluded from every pool and counted
    separately; genuinely empty sets route to the empty-agreement score.
    """
    gamma_config = gamma_config or GammaConfig()
    ref_ids = set(reference.sets)
    cand_ids = set(candidate.sets)
    if ref_ids != cand_ids:
        missing = sorted(ref_ids ^ cand_ids)[:5]
        raise ExampleIdMismatch(
            f"campaigns cover different examples (first differences: {missing})"
        )
    failed = reference.failed_ids() | candidate.failed_ids()

    rows: list[ExampleScores] = []
    ref_counts: list[int] = []
    cand_counts: list[int] = []
    for example_id in sorted(ref_ids):
        ref_set = reference.sets[example_id]
        cand_set = candidate.sets[example_id]
        if example_id in failed:
            rows.append(
                ExampleScores(example_id, len(ref_set), len(cand_set), "failed")
            )
            continue
        ref_counts.append(len(ref_set))
        cand_counts.append(len(cand_set))
        if len(ref_set) > 0 and len(cand_set) > 0:
            text = dataset[example_id].text
            rows.append(
                ExampleScores(
                    example_id,
                    len(ref_set),
                    len(cand_set),
                    "scored",
                    precision_hard=example_precision(cand_set, ref_set, MatchMode.HARD),
                    recall_hard=example_recall(cand_set, ref_set, MatchMode.HARD),
                    f1_hard=example_f1(cand_set, ref_set, MatchMode.HARD),
                    precision_soft=example_precision(cand_set, ref_set, MatchMode.SOFT),
                    recall_soft=example_recall(cand_set, ref_set, MatchMode.SOFT),
                    f1_soft=example_f1(cand_set, ref_set, MatchMode.SOFT),
                    gamma=gamma_score(
                        ref_set, cand_set, len(text), gamma_config, example_id
                    ),
                )
            )
        else:
            rows.append(
                ExampleScores(
                    example_id,
                    len(ref_set),
                    len(cand_set),
                    "s_empty",
                    s_empty=s_empty(cand_set, ref_set),
                )
            )

    scored = [r for r in rows if r.status == "scored"]
    empties = [r for r in rows if r.status == "s_empty"]
    gammas = [r.gamma for r in scored if r.gamma is not None]
    try:
        pearson = pearson_counts(ref_counts, cand_counts)
    except DegenerateVariance:
        pearson = None

    f1_hard = _mean([r.f1_hard for r in scored])
    f1_soft = _mean([r.f1_soft for r in scored])
    return ScoreReport(
        reference_id=reference.annotator_id,
        candidate_id=candidate.annotator_id,
        n_examples=len(rows),
        n_scored=len(scored),
        n_empty_scored=len(empties),
        n_failed=len(rows) - len(scored) - len(empties),
        n_gamma_scored=len(gammas),
        n_gamma_skipped=len(scored) - len(gammas),
        pearson=pearson,
        precision_hard=_mean([r.precision_hard for r in scored]),
        recall_hard=_mean([r.recall_hard for r in scored]),
        f1_hard=f1_hard,
        precision_soft=_mean([r.precision_soft for r in scored]),
        recall_soft=_mean([r.recall_soft for r in scored]),
        f1_soft=f1_soft,
        f1_delta=(
            f1_soft - f1_hard if f1_soft is not None and f1_hard is not None else None
        ),
        gamma=_mean(gammas),
        s_empty=_mean([r.s_empty for r in empties]),
        gamma_config=gamma_config,
        examples=tuple(rows),
    )


@dataclass(frozen=True)
class ConfusionMatrix:
    """Category confusion counts: rows are reference categories, columns
    candidate categories, paired by maximal character overlap."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    def normalized(self) -> np.ndarray:
        """Row-normalized view; all-zero rows stay all-zero."""
        totals = self.counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore"):
            out = np.where(totals > 0, self.counts / np.maximum(totals, 1), 0.0)
        return out


def confusion_matrix(reference: Campaign, candidate: Campaign, k: int) -> ConfusionMatrix:
    """Pair each reference annotation with the candidate annotation of
    maximal character overlap (ties to the lower start; zero overlap
    leaves it unpaired) and count category co-occurrences."""
    counts = np.zeros((k, k), dtype=np.int64)
    for example_id in sorted(set(reference.sets) & set(candidate.sets)):
        cand_set = candidate.sets[example_id]
        for ref_ann in reference.sets[example_id]:
            best: SpanAnnotation | None = None
            best_overlap = 0
            for cand_ann in cand_set:
                overlap = char_overlap(ref_ann, cand_ann)
                if overlap > best_overlap:
                    best = cand_ann
                    best_overlap = overlap
            if best is not None:
                counts[ref_ann.category, best.category] += 1
    return ConfusionMatrix(counts)


@dataclass(frozen=True)
class CampaignStats:
    """Descriptive statistics for one campaign: totals, density, the
    share of examples left empty, and mean span length."""

    annotations: int
    annotations_per_example: float
    pct_examples_empty: float
    chars_per_annotation: float | None
    n_examples: int
    n_failed: int


def annotation_stats(campaign: Campaign) -> CampaignStats:
    """Totals over the campaign's non-failed sets; failed examples are
    counted apart since they carry no annotator judgment."""
    failed = campaign.failed_ids()
    sets = [s for eid, s in sorted(campaign.sets.items()) if eid not in failed]
    total = sum(len(s) for s in sets)
    n_empty = sum(1 for s in sets if len(s) == 0)
    total_chars = sum(len(a) for s in sets for a in s)
    return CampaignStats(
        annotations=total,
        annotations_per_example=total / len(sets) if sets else 0.0,
        pct_examples_empty=100.0 * n_empty / len(sets) if sets else 0.0,
        chars_per_annotation=total_chars / total if total else None,
        n_examples=len(sets),
        n_failed=len(failed),
    )
