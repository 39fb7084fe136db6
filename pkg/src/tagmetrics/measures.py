"""Plug-in information measures and the Gini coefficient over count tables.

All quantities default to bits (base-2 logarithms).  Every function takes
an optional ``base`` argument for cross-checks in other units; the stored
accumulators are base-2 and rescaled on the way out.

Conventions: 0*log(0) is taken as 0 throughout, and question entropy uses
the uniform closed form log2(|Q|), which is exact when every question is
created once and never re-tagged.  Two mutual-information variants are
exposed.  ``mutual_information_uniform`` pairs the uniform question
entropy with the conditional entropy of the assignment joint, which is
the convention used in the longitudinal reports.  It can exceed the true
mutual information of the joint distribution when questions carry unequal
tag counts, so ``mutual_information_joint`` computes the exact quantity
from the joint table as well.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log2

import numpy as np

from .counters import FrequencyTable, JointAssignmentTable


def _rescale(bits: float, base: float) -> float:
    if base == 2.0:
        return bits
    if base <= 1.0:
        raise ValueError(f"log base must exceed 1, got {base}")
    return bits / log2(base)


def entropy(table: FrequencyTable, base: float = 2.0) -> float:
    """Shannon entropy of the count distribution, in bits by default.

    Uses the accumulator identity H = log2(total) - clogc_sum/total, so
    the cost is O(1) on a live table.  Result lies in
    [0, log(distinct)].
    """
    if table.total <= 0:
        raise ValueError("empty distribution")
    bits = log2(table.total) - table.clogc_sum / table.total
    return _rescale(max(bits, 0.0), base)


def uniform_question_entropy(num_questions: int, base: float = 2.0) -> float:
    """Entropy of a uniform distribution over ``num_questions`` outcomes."""
    if num_questions < 1:
        raise ValueError("empty corpus")
    return _rescale(log2(num_questions), base)


def conditional_entropy(joint: JointAssignmentTable, base: float = 2.0) -> float:
    """H(Q|T): expected uncertainty about the question once a tag is known.

    Equals -sum_t p(t) sum_q p(q|t) log p(q|t) with p(t) from the tag
    marginal and p(q|t) = pair_count/tag_count; zero-probability terms
    contribute nothing.
    """
    if joint.total_assignments <= 0:
        raise ValueError("empty distribution")
    bits = (joint.tag_marginal.clogc_sum - joint.pair_clogc_sum) / joint.total_assignments
    return _rescale(max(bits, 0.0), base)


def tag_conditional_entropy(joint: JointAssignmentTable, base: float = 2.0) -> float:
    """H(T|Q): uncertainty about the tag once the question is known."""
    if joint.total_assignments <= 0:
        raise ValueError("empty distribution")
    bits = (
        joint.question_marginal.clogc_sum - joint.pair_clogc_sum
    ) / joint.total_assignments
    return _rescale(max(bits, 0.0), base)


def conditional_entropy_distinct_corpus(
    tag_table: FrequencyTable, base: float = 2.0
) -> float:
    """Closed form of H(Q|T) when no (question, tag) pair repeats.

    When each tag appears at most once per question, p(q|t) is one over
    the tag's count and H(Q|T) collapses to sum_t p(t) * log2(count_t),
    i.e. clogc_sum/total of the tag table alone.  The caller guarantees
    the distinct-per-question regime.
    """
    if tag_table.total <= 0:
        raise ValueError("empty distribution")
    return _rescale(tag_table.clogc_sum / tag_table.total, base)


def mutual_information_uniform(
    num_questions: int, h_q_given_t: float, base: float = 2.0
) -> float:
    """I(Q;T) under the uniform-question convention: log(|Q|) - H(Q|T)."""
    if not np.isfinite(h_q_given_t) or h_q_given_t < 0:
        raise ValueError(f"conditional entropy must be finite and >= 0, got {h_q_given_t}")
    return uniform_question_entropy(num_questions, base) - h_q_given_t


def mutual_information_joint(joint: JointAssignmentTable, base: float = 2.0) -> float:
    """Exact I(Q;T) of the joint assignment distribution, as H(T) - H(T|Q).

    Identical (up to rounding) to H(Q) - H(Q|T) computed with the
    assignment-weighted question marginal.
    """
    return entropy(joint.tag_marginal, base) - tag_conditional_entropy(joint, base)


def gini(table: FrequencyTable) -> float:
    """Gini coefficient of the count vector, in [0, 1).

    With counts sorted ascending x_1..x_n, G = 2*sum(i*x_i)/(n*sum(x))
    - (n+1)/n.  Zero iff all counts are equal; invariant under scaling
    all counts by the same factor.
    """
    if table.total <= 0:
        raise ValueError("empty distribution")
    x = np.sort(np.fromiter(table.counts.values(), dtype=np.float64))
    n = x.size
    ranks = np.arange(1, n + 1, dtype=np.float64)
    g = 2.0 * np.dot(ranks, x) / (n * x.sum()) - (n + 1) / n
    return float(max(g, 0.0))


@dataclass
class EfficiencyMetrics:
    """All efficiency measures of one corpus state, in bits."""

    h_q: float
    h_t: float
    h_q_given_t: float
    mi_uniform: float
    mi_joint: float
    h_t_given_q: float
    gini: float


def efficiency_metrics(
    joint: JointAssignmentTable,
    num_questions: int | None = None,
    base: float = 2.0,
) -> EfficiencyMetrics:
    """Bundle every measure computed from one joint assignment table.

    ``num_questions`` defaults to the number of distinct questions seen in
    the assignments, which is the right choice whenever every question
    carries at least one tag.
    """
    if num_questions is None:
        num_questions = joint.question_marginal.distinct
    h_q = uniform_question_entropy(num_questions, base)
    h_t = entropy(joint.tag_marginal, base)
    h_q_given_t = conditional_entropy(joint, base)
    h_t_given_q = tag_conditional_entropy(joint, base)
    return EfficiencyMetrics(
        h_q=h_q,
        h_t=h_t,
        h_q_given_t=h_q_given_t,
        mi_uniform=h_q - h_q_given_t,
        mi_joint=h_t - h_t_given_q,
        h_t_given_q=h_t_given_q,
        gini=gini(joint.tag_marginal),
    )
