"""Longitudinal efficiency metrics over question corpora.

The core pipeline is a single pass over month-sorted records that keeps
incremental tables for the cumulative corpus and small per-month
aggregates, emitting one :class:`MetricsSnapshot` per calendar month
present.  Variants restrict the pipeline to tag-count strata or split it
by composite-tag usage; both conserve questions relative to the full
corpus.

Per-month rate definitions are ambiguous in general, so two flavors are
emitted where it matters: the new-tag rate over distinct tags used in the
month (primary) plus the per-assignment variant, and the mean tag length
weighted per assignment (primary) plus the per-distinct-tag variant.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log2
from typing import Iterable, Sequence

import numpy as np

from .counters import FrequencyTable
from .ingest import MAX_TAGS_PER_QUESTION, QuestionRecord
from .measures import (
    conditional_entropy_distinct_corpus,
    entropy,
    gini,
)


@dataclass
class MetricsSnapshot:
    """One row of longitudinal output: the corpus state at a point in time.

    ``month`` identifies empirical snapshots; simulation snapshots leave
    it empty and set ``users_processed`` instead.  Fields that are
    undefined at a given point (for example the new-tag rate of an empty
    window, or text statistics of synthetic tags) are None and serialize
    to empty CSV cells.
    """

    month: str
    cumulative_questions: int
    cumulative_tag_assignments: int
    distinct_tags: int
    h_q: float
    h_t: float
    h_q_given_t: float
    mi_uniform: float
    mi_joint: float
    gini: float
    new_tag_rate: float | None
    mean_tag_length: float | None
    composite_fraction: float | None
    new_questions_this_month: int
    mean_tags_per_question_this_month: float
    new_tag_rate_assignments: float | None = None
    mean_tag_length_distinct: float | None = None
    users_processed: int | None = None


@dataclass
class HeapsFit:
    """Power-law fit D(n) = k * n^beta of distinct-tag growth."""

    beta: float
    k: float
    fit_range: tuple[int, int]
    r_squared: float
    head_fraction: float


def is_composite(tag: str) -> bool:
    """True iff the tag contains at least one dash.

    A noisy but useful indicator of hierarchical or multi-word tags
    ("google-chrome-devtools"); single concepts spelled with a dash
    ("floating-point") count as composite too.
    """
    return "-" in tag


def new_tag_rate(
    month_records: Sequence[QuestionRecord], seen_tags: set[str]
) -> float | None:
    """Fraction of this month's distinct tags never seen in prior months.

    ``seen_tags`` must reflect all months strictly before this one.
    Returns None for an empty month.
    """
    used: set[str] = set()
    for rec in month_records:
        used.update(rec.tags)
    if not used:
        return None
    new = sum(1 for t in used if t not in seen_tags)
    return new / len(used)


def mean_tag_length(month_records: Sequence[QuestionRecord]) -> float:
    """Mean tag length in characters over all assignments in the month."""
    chars = 0
    assignments = 0
    for rec in month_records:
        for tag in rec.tags:
            chars += len(tag)
            assignments += 1
    if assignments == 0:
        raise ValueError("empty month")
    return chars / assignments


class _MonthAggregate:
    """Per-month counters feeding the non-cumulative snapshot fields."""

    __slots__ = (
        "questions",
        "assignments",
        "chars",
        "composite",
        "first_seen",
        "distinct",
    )

    def __init__(self) -> None:
        self.questions = 0
        self.assignments = 0
        self.chars = 0
        self.composite = 0
        self.first_seen = 0
        self.distinct: set[str] = set()


class TrajectoryBuilder:
    """Streaming accumulator producing one snapshot per month.

    Feed records in month order; snapshots close when the month changes
    and on :meth:`finish`.  Cumulative entropies use the incremental
    accumulators; the final month is recomputed after a full accumulator
    refresh so reported endpoints carry no floating-point drift.
    """

    def __init__(self) -> None:
        self.tag_table = FrequencyTable()
        self.tags_per_question: dict[int, int] = {}
        self.cumulative_questions = 0
        self.cumulative_assignments = 0
        self.snapshots: list[MetricsSnapshot] = []
        self._month: str | None = None
        self._agg = _MonthAggregate()

    def feed(self, record: QuestionRecord) -> None:
        if self._month is not None:
            if record.month < self._month:
                raise ValueError("unsorted corpus")
            if record.month > self._month:
                self._close_month()
                self._month = record.month
        else:
            self._month = record.month
        agg = self._agg
        agg.questions += 1
        k = len(record.tags)
        self.cumulative_questions += 1
        self.cumulative_assignments += k
        self.tags_per_question[k] = self.tags_per_question.get(k, 0) + 1
        for tag in record.tags:
            if tag not in self.tag_table.counts:
                agg.first_seen += 1
            agg.distinct.add(tag)
            agg.assignments += 1
            agg.chars += len(tag)
            if is_composite(tag):
                agg.composite += 1
            self.tag_table.add(tag)

    def finish(self) -> list[MetricsSnapshot]:
        if self._month is not None:
            self.tag_table.refresh()
            self._close_month()
            self._month = None
        return self.snapshots

    def _close_month(self) -> None:
        agg = self._agg
        n = self.tag_table.total
        h_q = log2(self.cumulative_questions)
        h_t = entropy(self.tag_table)
        h_q_given_t = conditional_entropy_distinct_corpus(self.tag_table)
        # Every (question, tag) pair occurs once, so H(T|Q) reduces to the
        # tags-per-question histogram.
        h_t_given_q = (
            sum(c * k * log2(k) for k, c in self.tags_per_question.items() if k > 1) / n
        )
        distinct_used = len(agg.distinct)
        self.snapshots.append(
            MetricsSnapshot(
                month=self._month or "",
                cumulative_questions=self.cumulative_questions,
                cumulative_tag_assignments=self.cumulative_assignments,
                distinct_tags=self.tag_table.distinct,
                h_q=h_q,
                h_t=h_t,
                h_q_given_t=h_q_given_t,
                mi_uniform=h_q - h_q_given_t,
                mi_joint=h_t - h_t_given_q,
                gini=gini(self.tag_table),
                new_tag_rate=agg.first_seen / distinct_used if distinct_used else None,
                mean_tag_length=agg.chars / agg.assignments if agg.assignments else None,
                composite_fraction=(
                    agg.composite / agg.assignments if agg.assignments else None
                ),
                new_questions_this_month=agg.questions,
                mean_tags_per_question_this_month=agg.assignments / agg.questions,
                new_tag_rate_assignments=(
                    agg.first_seen / agg.assignments if agg.assignments else None
                ),
                mean_tag_length_distinct=(
                    sum(len(t) for t in agg.distinct) / distinct_used
                    if distinct_used
                    else None
                ),
            )
        )
        self._agg = _MonthAggregate()


def monthly_trajectory(corpus: Iterable[QuestionRecord]) -> list[MetricsSnapshot]:
    """Cumulative efficiency metrics at every month present in the corpus.

    Single pass; the corpus must be sorted by month.  Raises ValueError
    on an empty or unsorted corpus.
    """
    builder = TrajectoryBuilder()
    for record in corpus:
        builder.feed(record)
    snapshots = builder.finish()
    if not snapshots:
        raise ValueError("empty corpus")
    return snapshots


def stratified_trajectory(
    corpus: Iterable[QuestionRecord], max_tags: int
) -> list[MetricsSnapshot]:
    """Trajectory restricted to questions with at most ``max_tags`` tags.

    Months with no surviving questions emit no snapshot; an entirely
    empty stratum yields an empty list.
    """
    if not 1 <= max_tags <= MAX_TAGS_PER_QUESTION:
        raise ValueError(f"max_tags must be in 1..{MAX_TAGS_PER_QUESTION}, got {max_tags}")
    builder = TrajectoryBuilder()
    for record in corpus:
        if len(record.tags) <= max_tags:
            builder.feed(record)
    return builder.finish()


def composite_split_trajectory(
    corpus: Iterable[QuestionRecord],
) -> tuple[list[MetricsSnapshot], list[MetricsSnapshot]]:
    """Separate trajectories for questions with and without composite tags.

    Partitions on whether any tag of the question is composite; each side
    runs the full pipeline with private tables in one shared pass.
    Returns (composite_side, plain_side); an empty partition gives an
    empty list.
    """
    with_composite = TrajectoryBuilder()
    without = TrajectoryBuilder()
    for record in corpus:
        if any(is_composite(t) for t in record.tags):
            with_composite.feed(record)
        else:
            without.feed(record)
    return with_composite.finish(), without.finish()


def distinct_growth_curve(corpus: Iterable[QuestionRecord]) -> tuple[np.ndarray, int]:
    """First-occurrence positions of each distinct tag in assignment order.

    Returns (jumps, total): ``jumps[i]`` is the 1-based assignment index
    at which the (i+1)-th distinct tag appeared, and ``total`` is the
    overall number of tag assignments.  The distinct count after n
    assignments is ``searchsorted(jumps, n, side="right")``.
    """
    seen: set[str] = set()
    jumps: list[int] = []
    n = 0
    for record in corpus:
        for tag in record.tags:
            n += 1
            if tag not in seen:
                seen.add(tag)
                jumps.append(n)
    return np.asarray(jumps, dtype=np.int64), n


def fit_heaps_curve(
    n_values: np.ndarray, d_values: np.ndarray, head_fraction: float = 1.0
) -> HeapsFit:
    """Least-squares fit of log2 D = log2 k + beta * log2 n.

    Only curve points with n within the first ``head_fraction`` of the
    largest n enter the fit.  R-squared is residual-based and reported as
    1 for an exact fit.  Raises ValueError("insufficient data") when
    fewer than 3 points remain.
    """
    if not 0 < head_fraction <= 1.0:
        raise ValueError(f"head_fraction must be in (0, 1], got {head_fraction}")
    n_values = np.asarray(n_values, dtype=np.float64)
    d_values = np.asarray(d_values, dtype=np.float64)
    if n_values.shape != d_values.shape:
        raise ValueError("curve arrays must have equal length")
    cutoff = head_fraction * n_values.max() if n_values.size else 0.0
    mask = n_values <= cutoff
    n_head = n_values[mask]
    d_head = d_values[mask]
    if n_head.size < 3:
        raise ValueError("insufficient data")
    x = np.log2(n_head)
    y = np.log2(d_head)
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    ss_res = float(np.dot(residuals, residuals))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    # ss_res <= ss_tot for a fitted line, so negligible ss_tot means an
    # exact (constant) fit rather than a division by rounding noise.
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 1e-12 else 1.0
    return HeapsFit(
        beta=float(slope),
        k=float(2.0**intercept),
        fit_range=(int(n_head.min()), int(n_head.max())),
        r_squared=r_squared,
        head_fraction=head_fraction,
    )


def subsample_growth_curve(
    jumps: np.ndarray, total: int, max_points: int = 1000
) -> tuple[np.ndarray, np.ndarray]:
    """Log-spaced sample of the distinct-growth curve, at most max_points."""
    if total < 1:
        raise ValueError("insufficient data")
    grid = np.unique(
        np.rint(np.logspace(0.0, np.log10(total), num=max_points)).astype(np.int64)
    )
    grid = grid[(grid >= 1) & (grid <= total)]
    d = np.searchsorted(jumps, grid, side="right").astype(np.float64)
    return grid.astype(np.float64), d


def heaps_fit(
    corpus: Iterable[QuestionRecord],
    head_fraction: float = 0.1,
    max_points: int = 1000,
) -> HeapsFit:
    """Heaps-law exponent of distinct-tag growth for a corpus.

    Builds the distinct-tags-vs-assignments curve, subsamples it
    logarithmically (at most ``max_points`` points, which matches a dense
    fit to ~1e-6 on power-law data while staying O(1) in corpus size),
    and fits the head given by ``head_fraction`` (1.0 fits everything).
    """
    jumps, total = distinct_growth_curve(corpus)
    if total < 1:
        raise ValueError("insufficient data")
    n_grid, d_grid = subsample_growth_curve(jumps, total, max_points)
    n_head = max(1.0, head_fraction * total)
    mask = n_grid <= n_head
    if mask.sum() < 3:
        raise ValueError("insufficient data")
    fit = fit_heaps_curve(n_grid[mask], d_grid[mask], head_fraction=1.0)
    return HeapsFit(
        beta=fit.beta,
        k=fit.k,
        fit_range=fit.fit_range,
        r_squared=fit.r_squared,
        head_fraction=head_fraction,
    )
