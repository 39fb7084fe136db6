"""Parameter recovery from assignment traces.

The reinforcement probabilities are Bernoulli rates, so their maximum
likelihood estimators are one minus the observed novelty fractions.  The
diversity factor of softmax selection enters through the likelihood of
each reinforcement choice given the tag frequencies at that moment;
novelty events carry no information about it and are excluded.

A trace stores, per tag event, the chosen tag's count and the urn total
immediately before the event.  The full frequency vector at any event is
reconstructed by replaying the event stream, and the softmax normalizer
is evaluated by grouping tags with equal counts, which is exact and keeps
each likelihood evaluation linear in the number of distinct count values
rather than the number of tags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

DEFAULT_SEARCH_INTERVAL = (0.01, 100.0)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_LOG_WIDTH_TOL = 1e-4
_BOUNDARY_TOL = 1e-3
_FLAT_TOL = 1e-9


class _GroupedLikelihood:
    """Flattened per-event count histograms for fast likelihood evaluation."""

    __slots__ = ("offsets", "base", "weights", "head", "n_events")

    def __init__(self, offsets, base, weights, head) -> None:
        self.offsets = offsets
        self.base = base
        self.weights = weights
        self.head = head
        self.n_events = len(head)

    def loglik(self, d: float) -> float:
        # Exponents are shifted by the running maximum count, so all are
        # <= 0 and each segment's sum is >= 1.
        z = self.weights * np.exp(self.base / d)
        normalizers = np.add.reduceat(z, self.offsets)
        return float(np.sum(self.head / d) - np.sum(np.log(normalizers)))


@dataclass
class AssignmentTrace:
    """Time-ordered novelty/reinforcement events of one tagging history.

    ``tag_count_before`` and ``tag_total_before`` hold the chosen tag's
    urn count and the urn total immediately before each event (count 0
    for novelty events).  ``seed_tags`` is the number of single-count
    tags present before the first event.
    """

    resource_novel: np.ndarray
    resource_ids: np.ndarray
    tag_novel: np.ndarray
    tag_ids: np.ndarray
    tag_count_before: np.ndarray
    tag_total_before: np.ndarray
    seed_tags: int = 0
    _grouped: _GroupedLikelihood | None = field(
        default=None, init=False, repr=False, compare=False
    )

    @property
    def n_resource_events(self) -> int:
        return int(self.resource_novel.size)

    @property
    def n_tag_events(self) -> int:
        return int(self.tag_novel.size)

    def _ensure_grouped(self) -> _GroupedLikelihood:
        if self._grouped is None:
            self._grouped = _build_grouped(self)
        return self._grouped


def _build_grouped(trace: AssignmentTrace) -> _GroupedLikelihood:
    hist: dict[int, int] = {}
    total = int(trace.seed_tags)
    max_count = 0
    if trace.seed_tags:
        hist[1] = int(trace.seed_tags)
        max_count = 1
    offsets: list[int] = []
    base: list[float] = []
    weights: list[float] = []
    head: list[float] = []
    for novel, c, n in zip(
        trace.tag_novel, trace.tag_count_before, trace.tag_total_before
    ):
        c = int(c)
        if int(n) != total:
            raise ValueError(
                f"inconsistent trace: event declares urn total {int(n)}, replay gives {total}"
            )
        if novel:
            hist[1] = hist.get(1, 0) + 1
            max_count = max(max_count, 1)
            total += 1
            continue
        if hist.get(c, 0) < 1:
            raise ValueError(
                f"inconsistent trace: reinforcement of a tag with count {c} not present"
            )
        offsets.append(len(base))
        inv = 1.0 / total
        for value, multiplicity in hist.items():
            base.append((value - max_count) * inv)
            weights.append(float(multiplicity))
        head.append((c - max_count) * inv)
        hist[c] -= 1
        if hist[c] == 0:
            del hist[c]
        hist[c + 1] = hist.get(c + 1, 0) + 1
        max_count = max(max_count, c + 1)
        total += 1
    return _GroupedLikelihood(
        offsets=np.asarray(offsets, dtype=np.intp),
        base=np.asarray(base, dtype=np.float64),
        weights=np.asarray(weights, dtype=np.float64),
        head=np.asarray(head, dtype=np.float64),
    )


def estimate_p(trace: AssignmentTrace) -> float:
    """MLE of the resource reinforcement probability: 1 - novelty rate."""
    if trace.n_resource_events == 0:
        raise ValueError("empty trace")
    return 1.0 - float(np.mean(trace.resource_novel))


def estimate_q(trace: AssignmentTrace) -> float:
    """MLE of the tag reinforcement probability: 1 - novelty rate."""
    if trace.n_tag_events == 0:
        raise ValueError("empty trace")
    return 1.0 - float(np.mean(trace.tag_novel))


def diversity_log_likelihood(trace: AssignmentTrace, d: float) -> float:
    """Log-likelihood of the reinforcement choices under softmax diversity d.

    Sums log softmax(frequencies-at-event / d)[chosen tag] over all
    reinforcement events; novelty events are conditioned away.
    """
    if d <= 0:
        raise ValueError(f"diversity factor must be positive, got {d}")
    grouped = trace._ensure_grouped()
    if grouped.n_events == 0:
        raise ValueError("trace has no reinforcement events")
    return grouped.loglik(d)


@dataclass
class DiversityEstimate:
    """Result of the 1-D diversity search; ``flag`` marks degenerate fits."""

    d_hat: float
    flag: str | None
    log_likelihood: float


def estimate_d(
    trace: AssignmentTrace,
    search_interval: tuple[float, float] = DEFAULT_SEARCH_INTERVAL,
) -> DiversityEstimate:
    """Maximize the diversity likelihood over ``search_interval``.

    Golden-section search on log(d), converging when the bracket width
    drops below 1e-4 relative.  A flat likelihood returns the geometric
    interval midpoint flagged "unidentifiable"; a maximizer hugging an
    endpoint is flagged "lower_bound" or "upper_bound" (the softmax
    family cannot represent some selection kernels, and the pin makes
    that visible instead of faking an interior optimum).
    """
    lo, hi = search_interval
    if not (0 < lo < hi):
        raise ValueError(f"search interval must satisfy 0 < lo < hi, got {search_interval}")
    a = math.log(lo)
    b = math.log(hi)

    def f(x: float) -> float:
        return diversity_log_likelihood(trace, math.exp(x))

    mid = 0.5 * (a + b)
    probes = [f(a), f(mid), f(b)]
    spread = max(probes) - min(probes)
    if spread <= _FLAT_TOL * max(1.0, abs(probes[1])):
        return DiversityEstimate(
            d_hat=math.exp(mid), flag="unidentifiable", log_likelihood=probes[1]
        )

    c = b - _GOLDEN * (b - a)
    e = a + _GOLDEN * (b - a)
    fc, fe = f(c), f(e)
    while b - a > _LOG_WIDTH_TOL:
        if fc >= fe:
            b, e, fe = e, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + _GOLDEN * (b - a)
            fe = f(e)
    x_hat = 0.5 * (a + b)
    flag = None
    if x_hat - math.log(lo) < _BOUNDARY_TOL:
        flag = "lower_bound"
    elif math.log(hi) - x_hat < _BOUNDARY_TOL:
        flag = "upper_bound"
    return DiversityEstimate(
        d_hat=math.exp(x_hat), flag=flag, log_likelihood=f(x_hat)
    )


def trace_from_corpus(records: Iterable) -> AssignmentTrace:
    """Build a trace from question records.

    Every question is created fresh, so all resource events are novel;
    a tag event is novel on the first-ever occurrence of its string and a
    reinforcement of the cumulative tag frequencies otherwise.
    """
    counts: dict[str, int] = {}
    tag_index: dict[str, int] = {}
    total = 0
    r_novel: list[bool] = []
    r_ids: list[int] = []
    t_novel: list[bool] = []
    t_ids: list[int] = []
    t_count: list[int] = []
    t_total: list[int] = []
    for idx, rec in enumerate(records):
        r_novel.append(True)
        r_ids.append(idx)
        for tag in rec.tags:
            c = counts.get(tag, 0)
            t_novel.append(c == 0)
            t_ids.append(tag_index.setdefault(tag, len(tag_index)))
            t_count.append(c)
            t_total.append(total)
            counts[tag] = c + 1
            total += 1
    return AssignmentTrace(
        resource_novel=np.asarray(r_novel, dtype=bool),
        resource_ids=np.asarray(r_ids, dtype=np.int64),
        tag_novel=np.asarray(t_novel, dtype=bool),
        tag_ids=np.asarray(t_ids, dtype=np.int64),
        tag_count_before=np.asarray(t_count, dtype=np.int64),
        tag_total_before=np.asarray(t_total, dtype=np.int64),
        seed_tags=0,
    )


def fit_report(
    trace: AssignmentTrace,
    search_interval: tuple[float, float] = DEFAULT_SEARCH_INTERVAL,
) -> dict:
    """All three estimates plus event counts, as a JSON-ready dict."""
    p_hat = estimate_p(trace)
    q_hat = estimate_q(trace)
    if np.any(~trace.tag_novel):
        d_est = estimate_d(trace, search_interval)
        d_hat: float | None = d_est.d_hat
        d_flag = d_est.flag
    else:
        d_hat = None
        d_flag = "no_reinforcement_events"
    return {
        "p_hat": p_hat,
        "q_hat": q_hat,
        "d_hat": d_hat,
        "d_flag": d_flag,
        "n_resource_events": trace.n_resource_events,
        "n_tag_events": trace.n_tag_events,
        "search_interval": [search_interval[0], search_interval[1]],
    }
