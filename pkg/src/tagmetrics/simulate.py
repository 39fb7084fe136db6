"""Two-urn growth model of a tagging system.

Each discrete step one new user tags one resource.  The resource comes
from a reinforcement draw (proportional to current counts) with
probability ``p`` and is created fresh otherwise; the number of tags is
binomial (re-drawn until at least one); each tag is a reinforcement draw
with probability ``q`` and fresh otherwise.  Reinforcement selection uses
either the classical proportional kernel or a softmax over relative
frequencies whose temperature ``d`` trades popularity bias (small d) for
uniform choice (large d).

Tags picked for the same resource within one step must be distinct: a
duplicate reinforcement draw is retried up to ``max_redraws`` times and
then falls back to creating a fresh tag so the step always completes
(the fallback count is kept on the state).  The same resource may be
re-tagged with the same tag by a later user, which is what makes the
general joint-distribution measures necessary here.

Everything is driven by one deterministic generator per run: identical
(params, users, seed) give bit-identical assignment logs and snapshots.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .analysis import MetricsSnapshot
from .counters import FrequencyTable, JointAssignmentTable
from .estimate import AssignmentTrace
from .measures import efficiency_metrics

logger = logging.getLogger(__name__)

PROPORTIONAL = "proportional"
SOFTMAX = "softmax"


@dataclass(frozen=True)
class ModelParams:
    """Model configuration; probabilities in [0, 1], seeds at least 1."""

    p: float
    q: float
    selection: str = PROPORTIONAL
    d: float | None = None
    tag_count_n: int = 5
    tag_count_p: float = 0.6
    seed_resources: int = 1
    seed_tags: int = 1
    max_redraws: int = 16

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p}")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"q must be in [0, 1], got {self.q}")
        if self.selection not in (PROPORTIONAL, SOFTMAX):
            raise ValueError(f"unknown selection kernel {self.selection!r}")
        if self.selection == SOFTMAX and (self.d is None or self.d <= 0):
            raise ValueError("softmax selection requires a positive diversity factor d")
        if self.tag_count_n < 1:
            raise ValueError(f"tag_count_n must be >= 1, got {self.tag_count_n}")
        if not 0.0 < self.tag_count_p <= 1.0:
            raise ValueError(f"tag_count_p must be in (0, 1], got {self.tag_count_p}")
        if self.seed_resources < 1 or self.seed_tags < 1:
            raise ValueError("urns must be seeded with at least one item each")
        if self.max_redraws < 0:
            raise ValueError(f"max_redraws must be >= 0, got {self.max_redraws}")


def softmax_weights(frequencies: Sequence[float], d: float) -> np.ndarray:
    """Softmax of relative frequencies with temperature ``d``.

    Computed with max-subtraction so extreme temperatures stay finite;
    the output sums to 1 and is a valid probability vector for any
    non-negative input, including a single entry.
    """
    if d <= 0:
        raise ValueError(f"diversity factor must be positive, got {d}")
    f = np.asarray(frequencies, dtype=np.float64)
    z = np.exp((f - f.max()) / d)
    return z / z.sum()


class _Urn:
    """Growable count vector with proportional and softmax draws."""

    __slots__ = ("counts", "n", "total")

    def __init__(self, seed_items: int) -> None:
        capacity = max(16, seed_items)
        self.counts = np.zeros(capacity, dtype=np.float64)
        self.counts[:seed_items] = 1.0
        self.n = seed_items
        self.total = float(seed_items)

    def add_new(self) -> int:
        if self.n == self.counts.size:
            grown = np.zeros(self.counts.size * 2, dtype=np.float64)
            grown[: self.n] = self.counts
            self.counts = grown
        self.counts[self.n] = 1.0
        self.total += 1.0
        self.n += 1
        return self.n - 1

    def increment(self, index: int) -> None:
        self.counts[index] += 1.0
        self.total += 1.0

    def draw_proportional(self, rng: np.random.Generator) -> int:
        cumulative = np.cumsum(self.counts[: self.n])
        r = rng.random() * cumulative[-1]
        return int(min(np.searchsorted(cumulative, r, side="right"), self.n - 1))

    def draw_softmax(self, rng: np.random.Generator, d: float) -> int:
        weights = softmax_weights(self.counts[: self.n] / self.total, d)
        cumulative = np.cumsum(weights)
        r = rng.random() * cumulative[-1]
        return int(min(np.searchsorted(cumulative, r, side="right"), self.n - 1))

    def to_table(self) -> FrequencyTable:
        return FrequencyTable.from_counts(
            {i: int(self.counts[i]) for i in range(self.n)}
        )


class UrnState:
    """Full simulator state: both urns, the assignment log, and the RNG."""

    def __init__(self, params: ModelParams, seed) -> None:
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.seed_resources = params.seed_resources
        self.seed_tags = params.seed_tags
        self._resources = _Urn(params.seed_resources)
        self._tags = _Urn(params.seed_tags)
        self.assignments = JointAssignmentTable()
        self.users_processed = 0
        self.duplicate_fallbacks = 0
        self._r_novel: list[bool] = []
        self._r_ids: list[int] = []
        self._t_novel: list[bool] = []
        self._t_ids: list[int] = []
        self._t_count_before: list[int] = []
        self._t_total_before: list[int] = []

    @property
    def resource_counts(self) -> FrequencyTable:
        return self._resources.to_table()

    @property
    def tag_counts(self) -> FrequencyTable:
        return self._tags.to_table()

    def trace(self) -> AssignmentTrace:
        """The assignment log as an estimation-ready event trace."""
        return AssignmentTrace(
            resource_novel=np.asarray(self._r_novel, dtype=bool),
            resource_ids=np.asarray(self._r_ids, dtype=np.int64),
            tag_novel=np.asarray(self._t_novel, dtype=bool),
            tag_ids=np.asarray(self._t_ids, dtype=np.int64),
            tag_count_before=np.asarray(self._t_count_before, dtype=np.int64),
            tag_total_before=np.asarray(self._t_total_before, dtype=np.int64),
            seed_tags=self.seed_tags,
        )


def new_state(params: ModelParams, seed) -> UrnState:
    return UrnState(params, seed)


def step_user(state: UrnState, params: ModelParams) -> UrnState:
    """Advance the model by one user; mutates and returns ``state``."""
    rng = state.rng
    resources = state._resources
    tags = state._tags

    if rng.random() < params.p:
        rid = resources.draw_proportional(rng)
        resources.increment(rid)
        novel_resource = False
    else:
        rid = resources.add_new()
        novel_resource = True
    state._r_novel.append(novel_resource)
    state._r_ids.append(rid)

    k = 0
    while k < 1:
        k = int(rng.binomial(params.tag_count_n, params.tag_count_p))

    use_softmax = params.selection == SOFTMAX
    chosen: set[int] = set()
    for _ in range(k):
        total_before = int(tags.total)
        tid = -1
        if rng.random() < params.q:
            for _attempt in range(params.max_redraws + 1):
                if use_softmax:
                    candidate = tags.draw_softmax(rng, params.d)
                else:
                    candidate = tags.draw_proportional(rng)
                if candidate not in chosen:
                    tid = candidate
                    break
            if tid < 0:
                state.duplicate_fallbacks += 1
                logger.debug(
                    "duplicate fallback at user %d (all %d redraws collided)",
                    state.users_processed,
                    params.max_redraws,
                )
        if tid < 0:
            count_before = 0
            tid = tags.add_new()
            novel_tag = True
        else:
            count_before = int(tags.counts[tid])
            tags.increment(tid)
            novel_tag = False
        chosen.add(tid)
        state._t_novel.append(novel_tag)
        state._t_ids.append(tid)
        state._t_count_before.append(count_before)
        state._t_total_before.append(total_before)
        state.assignments.add(rid, tid)

    state.users_processed += 1
    return state


def _window_snapshot(
    state: UrnState, r_start: int, t_start: int, steps: int
) -> MetricsSnapshot:
    metrics = efficiency_metrics(state.assignments)
    novel_tags = sum(state._t_novel[t_start:])
    window_ids = state._t_ids[t_start:]
    distinct_used = len(set(window_ids))
    window_assignments = len(window_ids)
    novel_resources = sum(state._r_novel[r_start:])
    return MetricsSnapshot(
        month="",
        cumulative_questions=state.assignments.question_marginal.distinct,
        cumulative_tag_assignments=state.assignments.total_assignments,
        distinct_tags=state.assignments.tag_marginal.distinct,
        h_q=metrics.h_q,
        h_t=metrics.h_t,
        h_q_given_t=metrics.h_q_given_t,
        mi_uniform=metrics.mi_uniform,
        mi_joint=metrics.mi_joint,
        gini=metrics.gini,
        new_tag_rate=novel_tags / distinct_used if distinct_used else None,
        mean_tag_length=None,
        composite_fraction=None,
        new_questions_this_month=novel_resources,
        mean_tags_per_question_this_month=window_assignments / steps,
        new_tag_rate_assignments=(
            novel_tags / window_assignments if window_assignments else None
        ),
        mean_tag_length_distinct=None,
        users_processed=state.users_processed,
    )


def simulate(
    params: ModelParams,
    users: int,
    snapshot_every: int,
    seed,
    snapshot_start: int = 0,
) -> list[MetricsSnapshot]:
    """Run the model for ``users`` steps, snapshotting the full joint table.

    Snapshots are emitted every ``snapshot_every`` users from
    ``snapshot_start`` on, plus one at the final step.  Per-window fields
    cover the span since the previous snapshot.
    """
    if users < 1:
        raise ValueError(f"users must be >= 1, got {users}")
    if snapshot_every < 1:
        raise ValueError(f"snapshot_every must be >= 1, got {snapshot_every}")
    state = new_state(params, seed)
    snapshots: list[MetricsSnapshot] = []
    r_mark = 0
    t_mark = 0
    last_snap_user = 0
    for user in range(1, users + 1):
        step_user(state, params)
        due = user >= snapshot_start and (user - snapshot_start) % snapshot_every == 0
        if due or user == users:
            snapshots.append(
                _window_snapshot(state, r_mark, t_mark, user - last_snap_user)
            )
            r_mark = len(state._r_novel)
            t_mark = len(state._t_novel)
            last_snap_user = user
    return snapshots


def simulate_state(params: ModelParams, users: int, seed) -> UrnState:
    """Run ``users`` steps and return the final state (no snapshots)."""
    if users < 1:
        raise ValueError(f"users must be >= 1, got {users}")
    state = new_state(params, seed)
    for _ in range(users):
        step_user(state, params)
    return state


def tail_slope(
    trajectory: Sequence[MetricsSnapshot],
    metric: str,
    window: int,
    method: str = "least_squares",
) -> float:
    """Rate of change of ``metric`` per user over the final window.

    ``method`` is "least_squares" (default) or "endpoints" (plain
    difference quotient over the window).
    """
    if not trajectory:
        raise ValueError("empty trajectory")
    points = [(s.users_processed, getattr(s, metric)) for s in trajectory]
    if any(u is None for u, _ in points):
        raise ValueError("trajectory snapshots lack users_processed")
    last = points[-1][0]
    if last - points[0][0] < window:
        raise ValueError(
            f"trajectory spans {last - points[0][0]} users, window needs {window}"
        )
    tail = [(u, y) for u, y in points if u >= last - window]
    if len(tail) < 2:
        raise ValueError("fewer than 2 snapshots in window")
    u = np.array([p[0] for p in tail], dtype=np.float64)
    y = np.array([p[1] for p in tail], dtype=np.float64)
    if method == "least_squares":
        return float(np.polyfit(u, y, 1)[0])
    if method == "endpoints":
        return float((y[-1] - y[0]) / (u[-1] - u[0]))
    raise ValueError(f"unknown slope method {method!r}")


@dataclass
class SweepResult:
    """Mean tail slopes over a (p, q) grid; primary metric is mi_joint."""

    p_values: np.ndarray
    q_values: np.ndarray
    mean_slope: np.ndarray
    std_slope: np.ndarray
    mean_slope_uniform: np.ndarray
    replicates: int
    tail_window: int


def _run_cell(args) -> tuple[int, int, list[float], list[float]]:
    i, j, params, users, window, snapshot_every, root_seed, replicates = args
    slopes_joint: list[float] = []
    slopes_uniform: list[float] = []
    for r in range(replicates):
        seed = np.random.SeedSequence((root_seed, i, j, r))
        trajectory = simulate(
            params,
            users,
            snapshot_every,
            seed,
            snapshot_start=users - window,
        )
        slopes_joint.append(tail_slope(trajectory, "mi_joint", window))
        slopes_uniform.append(tail_slope(trajectory, "mi_uniform", window))
    return i, j, slopes_joint, slopes_uniform


def sweep(
    grid_resolution: int,
    base_params: ModelParams,
    users: int,
    window: int,
    replicates: int,
    seed: int,
    threads: int | None = None,
) -> SweepResult:
    """Mean mi_joint tail slope for every (p, q) on a uniform grid.

    Each cell runs ``replicates`` independent simulations whose seeds are
    derived deterministically from (seed, cell, replicate), so serial and
    parallel sweeps produce identical results.  ``threads`` bounds worker
    processes; None uses the machine parallelism, 1 stays in-process.
    """
    if grid_resolution < 2:
        raise ValueError(f"grid_resolution must be >= 2, got {grid_resolution}")
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    if users <= window:
        raise ValueError(f"users ({users}) must exceed the tail window ({window})")
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    p_values = np.linspace(0.0, 1.0, grid_resolution)
    q_values = np.linspace(0.0, 1.0, grid_resolution)
    snapshot_every = max(1, window // 10)
    jobs = [
        (
            i,
            j,
            replace(base_params, p=float(p_values[i]), q=float(q_values[j])),
            users,
            window,
            snapshot_every,
            seed,
            replicates,
        )
        for i in range(grid_resolution)
        for j in range(grid_resolution)
    ]
    mean_slope = np.zeros((grid_resolution, grid_resolution))
    std_slope = np.zeros((grid_resolution, grid_resolution))
    mean_uniform = np.zeros((grid_resolution, grid_resolution))
    if threads is None or threads <= 0:
        threads = os.cpu_count() or 1
    if threads == 1:
        results = map(_run_cell, jobs)
        for i, j, joint, uniform in results:
            mean_slope[i, j] = np.mean(joint)
            std_slope[i, j] = np.std(joint)
            mean_uniform[i, j] = np.mean(uniform)
    else:
        chunk = max(1, len(jobs) // (threads * 4))
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for i, j, joint, uniform in pool.map(_run_cell, jobs, chunksize=chunk):
                mean_slope[i, j] = np.mean(joint)
                std_slope[i, j] = np.std(joint)
                mean_uniform[i, j] = np.mean(uniform)
    return SweepResult(
        p_values=p_values,
        q_values=q_values,
        mean_slope=mean_slope,
        std_slope=std_slope,
        mean_slope_uniform=mean_uniform,
        replicates=replicates,
        tail_window=window,
    )
