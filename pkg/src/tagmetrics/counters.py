"""Incremental count stores backing all entropy and inequality measures.

Both tables keep running accumulators (totals and sums of c*log2(c)) so
that entropy-style quantities of a live, growing table cost O(1) instead
of a pass over all keys.  Accumulators can be rebuilt exactly from the
stored counts with :meth:`refresh`, which bounds floating-point drift when
a table is finalized for a report.

Tables are single-writer structures.  A finalized table may be read from
any number of threads; callers own synchronization while writing.
"""

from __future__ import annotations

from math import log2
from typing import Hashable, Iterable, Mapping


class FrequencyTable:
    """Item counts with running ``total`` and ``clogc_sum`` accumulators.

    ``clogc_sum`` holds the sum of ``c * log2(c)`` over all stored counts,
    the quantity from which plug-in entropies are assembled.
    """

    __slots__ = ("counts", "total", "clogc_sum")

    def __init__(self) -> None:
        self.counts: dict[Hashable, int] = {}
        self.total: int = 0
        self.clogc_sum: float = 0.0

    @property
    def distinct(self) -> int:
        """Number of stored keys."""
        return len(self.counts)

    def add(self, item: Hashable) -> "FrequencyTable":
        """Increment ``item`` by one, updating all accumulators in O(1)."""
        c = self.counts.get(item, 0)
        new = c + 1
        self.counts[item] = new
        self.total += 1
        delta = new * log2(new)
        if c:
            delta -= c * log2(c)
        self.clogc_sum += delta
        return self

    def refresh(self) -> None:
        """Recompute accumulators from the stored counts (drift control)."""
        self.total = sum(self.counts.values())
        self.clogc_sum = sum(c * log2(c) for c in self.counts.values() if c > 1)

    @classmethod
    def from_counts(cls, counts: Mapping[Hashable, int]) -> "FrequencyTable":
        """Build a table from explicit counts; all counts must be positive."""
        table = cls()
        for item, c in counts.items():
            if c <= 0:
                raise ValueError(f"count for {item!r} must be positive, got {c}")
            table.counts[item] = int(c)
        table.refresh()
        return table

    @classmethod
    def from_items(cls, items: Iterable[Hashable]) -> "FrequencyTable":
        table = cls()
        for item in items:
            table.add(item)
        return table

    def __contains__(self, item: Hashable) -> bool:
        return item in self.counts

    def __len__(self) -> int:
        return len(self.counts)

    def __repr__(self) -> str:
        return f"FrequencyTable(distinct={self.distinct}, total={self.total})"


class JointAssignmentTable:
    """Co-occurrence counts of (question, tag) assignments with marginals.

    ``pair_counts`` maps ``(question, tag)`` to a positive count.  The two
    marginal tables are kept consistent with the pair counts on every add,
    and ``pair_clogc_sum`` accumulates ``c * log2(c)`` over pair counts so
    conditional entropies of the live table are O(1).
    """

    __slots__ = (
        "pair_counts",
        "tag_marginal",
        "question_marginal",
        "total_assignments",
        "pair_clogc_sum",
    )

    def __init__(self) -> None:
        self.pair_counts: dict[tuple[Hashable, Hashable], int] = {}
        self.tag_marginal = FrequencyTable()
        self.question_marginal = FrequencyTable()
        self.total_assignments: int = 0
        self.pair_clogc_sum: float = 0.0

    def add(self, question: Hashable, tag: Hashable) -> "JointAssignmentTable":
        """Record one assignment of ``tag`` to ``question``."""
        key = (question, tag)
        c = self.pair_counts.get(key, 0)
        new = c + 1
        self.pair_counts[key] = new
        delta = new * log2(new)
        if c:
            delta -= c * log2(c)
        self.pair_clogc_sum += delta
        self.tag_marginal.add(tag)
        self.question_marginal.add(question)
        self.total_assignments += 1
        return self

    def refresh(self) -> None:
        """Recompute all accumulators, including the marginals', from counts."""
        self.total_assignments = sum(self.pair_counts.values())
        self.pair_clogc_sum = sum(
            c * log2(c) for c in self.pair_counts.values() if c > 1
        )
        self.tag_marginal.refresh()
        self.question_marginal.refresh()

    @classmethod
    def from_records(cls, records: Iterable) -> "JointAssignmentTable":
        """Build from objects with ``question_id`` and ``tags`` attributes."""
        joint = cls()
        for rec in records:
            for tag in rec.tags:
                joint.add(rec.question_id, tag)
        return joint

    def __repr__(self) -> str:
        return (
            f"JointAssignmentTable(pairs={len(self.pair_counts)}, "
            f"assignments={self.total_assignments})"
        )
