"""Shared corpus generators for the test suite."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tagmetrics.ingest import QuestionRecord

# A pool mixing plain and composite names, with zipf-ish popularity.
_TAG_POOL = [
    "python",
    "java",
    "c#",
    "javascript",
    "sql",
    "arrays",
    "regex",
    "django",
    "numpy",
    "pandas",
    "google-chrome",
    "floating-point",
    "unit-testing",
    "machine-learning",
    "type-conversion",
    "asp.net",
    "linq",
    "html",
    "css",
    "git",
    "google-chrome-devtools",
    "visual-studio-code",
    "python-3.x",
    "spring-boot",
    "react-native",
]


def random_corpus(
    rng: np.random.Generator,
    n_questions: int,
    n_months: int = 6,
    tag_pool: list[str] | None = None,
    fixed_tag_count: int | None = None,
    start_year: int = 2010,
) -> list[QuestionRecord]:
    """Month-sorted random corpus with 1..5 distinct tags per question."""
    pool = tag_pool if tag_pool is not None else _TAG_POOL
    weights = 1.0 / np.arange(1, len(pool) + 1)
    weights /= weights.sum()
    month_of = np.sort(rng.integers(0, n_months, size=n_questions))
    records = []
    for i in range(n_questions):
        if fixed_tag_count is not None:
            k = fixed_tag_count
        else:
            k = int(rng.integers(1, min(5, len(pool)) + 1))
        tags = list(rng.choice(pool, size=k, replace=False, p=weights))
        m = int(month_of[i])
        month = f"{start_year + m // 12}-{m % 12 + 1:02d}"
        records.append(QuestionRecord(question_id=f"q{i}", month=month, tags=tags))
    return records


def toy_corpus() -> list[QuestionRecord]:
    """The 3-question corpus with hand-computed metric values."""
    return [
        QuestionRecord("q1", "2010-01", ["t1"]),
        QuestionRecord("q2", "2010-01", ["t1", "t2"]),
        QuestionRecord("q3", "2010-02", ["t2"]),
    ]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260809)
