"""Growth-model mechanics: kernels, determinism, conservation, slopes."""

from __future__ import annotations

import math

import numpy as np
import pytest

from tagmetrics.analysis import MetricsSnapshot
from tagmetrics.counters import JointAssignmentTable
from tagmetrics.measures import conditional_entropy, efficiency_metrics
from tagmetrics.simulate import (
    ModelParams,
    SweepResult,
    new_state,
    simulate,
    simulate_state,
    softmax_weights,
    step_user,
    sweep,
    tail_slope,
)


class TestModelParams:
    def test_probability_bounds(self):
        with pytest.raises(ValueError):
            ModelParams(p=-0.1, q=0.5)
        with pytest.raises(ValueError):
            ModelParams(p=0.5, q=1.5)

    def test_softmax_requires_d(self):
        with pytest.raises(ValueError):
            ModelParams(p=0.5, q=0.5, selection="softmax")
        with pytest.raises(ValueError):
            ModelParams(p=0.5, q=0.5, selection="softmax", d=0.0)

    def test_unknown_kernel(self):
        with pytest.raises(ValueError):
            ModelParams(p=0.5, q=0.5, selection="magic")

    def test_seeds_positive(self):
        with pytest.raises(ValueError):
            ModelParams(p=0.5, q=0.5, seed_resources=0)


class TestSoftmaxWeights:
    def test_symmetric(self):
        for d in (0.01, 1.0, 1e9):
            w = softmax_weights([0.5, 0.5], d)
            np.testing.assert_allclose(w, [0.5, 0.5], atol=1e-15)

    def test_high_diversity_flattens(self):
        w = softmax_weights([0.9, 0.1], 1e9)
        np.testing.assert_allclose(w, [0.5, 0.5], atol=1e-6)

    def test_low_diversity_sharpens(self):
        w = softmax_weights([0.9, 0.1], 0.01)
        assert w[0] >= 1.0 - 1e-30
        assert w[1] <= 1e-30

    def test_rejects_nonpositive_d(self):
        with pytest.raises(ValueError):
            softmax_weights([1.0], 0.0)
        with pytest.raises(ValueError):
            softmax_weights([1.0], -1.0)

    def test_probability_vector(self, rng):
        for size in (1, 2, 17, 400):
            f = rng.dirichlet(np.ones(size))
            for d in (0.05, 1.0, 50.0):
                w = softmax_weights(f, d)
                assert abs(w.sum() - 1.0) < 1e-12
                assert np.all(w >= 0)

    def test_extreme_temperature_stays_finite(self):
        w = softmax_weights([1.0, 0.0, 0.0], 1e-6)
        assert np.isfinite(w).all()
        assert w[0] == pytest.approx(1.0)


class TestStepUser:
    def test_pure_novelty_makes_tags_identifying(self):
        params = ModelParams(p=0.0, q=0.0)
        snaps = simulate(params, 200, 20, seed=1)
        for snap in snaps:
            assert snap.h_q_given_t == pytest.approx(0.0, abs=1e-12)

    def test_determinism(self):
        params = ModelParams(p=0.4, q=0.7, selection="softmax", d=1.0)
        a = simulate_state(params, 300, seed=9)
        b = simulate_state(params, 300, seed=9)
        assert a._t_ids == b._t_ids
        assert a._r_ids == b._r_ids
        assert a.assignments.pair_counts == b.assignments.pair_counts
        sa = simulate(params, 300, 30, seed=9)
        sb = simulate(params, 300, 30, seed=9)
        assert sa == sb

    def test_novel_resource_rate_matches_bernoulli(self):
        params = ModelParams(p=0.75, q=0.5)
        state = simulate_state(params, 10_000, seed=3)
        novel = np.mean(state._r_novel)
        se = math.sqrt(0.25 * 0.75 / 10_000)
        assert abs(novel - 0.25) <= 3 * se

    def test_conservation(self):
        params = ModelParams(p=0.5, q=0.5, seed_resources=7, seed_tags=3)
        state = simulate_state(params, 500, seed=11)
        assert state._resources.total == 7 + 500
        assert state._tags.total == 3 + len(state._t_novel)
        assert state.assignments.total_assignments == len(state._t_novel)

    def test_step_distinctness(self):
        # Tiny tag pool plus q=1 forces collisions; per-step tags stay distinct.
        params = ModelParams(p=0.0, q=1.0, seed_tags=2, max_redraws=4)
        state = new_state(params, seed=5)
        mark = 0
        for _ in range(300):
            step_user(state, params)
            step_tags = state._t_ids[mark:]
            assert len(step_tags) == len(set(step_tags))
            mark = len(state._t_ids)
        assert state.duplicate_fallbacks > 0

    def test_single_user(self):
        params = ModelParams(p=0.0, q=0.0)
        state = simulate_state(params, 1, seed=2)
        assert state._resources.n == 1 + 1
        assert 1 <= state._tags.n - 1 <= 5

    def test_tag_count_in_binomial_support(self):
        params = ModelParams(p=0.3, q=0.3, tag_count_n=5, tag_count_p=0.6)
        state = new_state(params, seed=8)
        sizes = []
        mark = 0
        for _ in range(400):
            step_user(state, params)
            sizes.append(len(state._t_ids) - mark)
            mark = len(state._t_ids)
        assert all(1 <= k <= 5 for k in sizes)
        # Conditioned on k >= 1 the mean sits slightly above n*p = 3.
        assert np.mean(sizes) == pytest.approx(3.0, abs=0.3)

    def test_polya_concentration_trend(self):
        # Classical urn dynamics: the top tag's share grows with u.
        params = ModelParams(p=1.0, q=1.0, seed_resources=50, seed_tags=20)
        shares = []
        for users in (200, 2000):
            top = []
            for s in range(5):
                state = simulate_state(params, users, seed=(users, s))
                counts = np.array(list(state.assignments.tag_marginal.counts.values()))
                top.append(counts.max() / counts.sum())
            shares.append(np.mean(top))
        assert shares[1] > shares[0]


class TestSimulateSnapshots:
    def test_snapshot_cadence_and_final(self):
        params = ModelParams(p=0.2, q=0.2)
        snaps = simulate(params, 105, 25, seed=4)
        assert [s.users_processed for s in snaps] == [25, 50, 75, 100, 105]

    def test_snapshot_start_skips_prefix(self):
        params = ModelParams(p=0.2, q=0.2)
        snaps = simulate(params, 100, 10, seed=4, snapshot_start=70)
        assert [s.users_processed for s in snaps] == [70, 80, 90, 100]

    def test_metrics_match_brute_force_on_final_table(self):
        params = ModelParams(p=0.6, q=0.8, seed_resources=5, seed_tags=5)
        state = simulate_state(params, 400, seed=12)
        fresh = JointAssignmentTable()
        for (q, t), c in state.assignments.pair_counts.items():
            for _ in range(c):
                fresh.add(q, t)
        live = efficiency_metrics(state.assignments)
        scratch = efficiency_metrics(fresh)
        for field in ("h_q", "h_t", "h_q_given_t", "mi_uniform", "mi_joint", "gini"):
            assert getattr(live, field) == pytest.approx(getattr(scratch, field), abs=1e-9)

    def test_distinct_tags_and_counts_consistent(self):
        params = ModelParams(p=0.3, q=0.6)
        snaps = simulate(params, 300, 50, seed=6)
        last = snaps[-1]
        assert last.cumulative_tag_assignments >= last.distinct_tags
        assert last.users_processed == 300
        assert last.month == ""
        assert last.mean_tag_length is None


class TestTailSlope:
    def _traj(self, us, ys):
        return [
            MetricsSnapshot(
                month="",
                cumulative_questions=1,
                cumulative_tag_assignments=1,
                distinct_tags=1,
                h_q=0.0,
                h_t=float(y),
                h_q_given_t=0.0,
                mi_uniform=0.0,
                mi_joint=0.0,
                gini=0.0,
                new_tag_rate=None,
                mean_tag_length=None,
                composite_fraction=None,
                new_questions_this_month=0,
                mean_tags_per_question_this_month=1.0,
                users_processed=int(u),
            )
            for u, y in zip(us, ys)
        ]

    def test_exact_line(self):
        us = np.arange(0, 1100, 100)
        traj = self._traj(us, 2.0 * us)
        assert tail_slope(traj, "h_t", 1000) == pytest.approx(2.0)

    def test_constant(self):
        us = np.arange(0, 1100, 100)
        traj = self._traj(us, np.full(us.size, 3.3))
        assert tail_slope(traj, "h_t", 1000) == pytest.approx(0.0, abs=1e-12)

    def test_noisy_line(self, rng):
        us = np.arange(0, 2050, 50)
        noise = rng.normal(0, 0.01, us.size)
        traj = self._traj(us, 0.005 * us + noise)
        assert tail_slope(traj, "h_t", 1000) == pytest.approx(0.005, abs=0.002)

    def test_endpoint_method(self):
        us = np.arange(0, 1100, 100)
        traj = self._traj(us, 2.0 * us)
        assert tail_slope(traj, "h_t", 1000, method="endpoints") == pytest.approx(2.0)

    def test_window_errors(self):
        us = [0, 500]
        traj = self._traj(us, [0.0, 1.0])
        with pytest.raises(ValueError, match="spans"):
            tail_slope(traj, "h_t", 1000)
        with pytest.raises(ValueError, match="fewer than 2"):
            tail_slope(self._traj([0, 1000], [0.0, 1.0])[1:], "h_t", 10)


class TestSweep:
    def test_small_grid_shape_and_determinism(self):
        base = ModelParams(p=0.0, q=0.0, seed_resources=10, seed_tags=10)
        a = sweep(2, base, users=300, window=150, replicates=2, seed=77, threads=1)
        b = sweep(2, base, users=300, window=150, replicates=2, seed=77, threads=1)
        assert a.mean_slope.shape == (2, 2)
        np.testing.assert_array_equal(a.mean_slope, b.mean_slope)
        np.testing.assert_array_equal(a.std_slope, b.std_slope)

    def test_parallel_matches_serial(self):
        base = ModelParams(p=0.0, q=0.0, seed_resources=10, seed_tags=10)
        serial = sweep(2, base, users=200, window=100, replicates=1, seed=13, threads=1)
        parallel = sweep(2, base, users=200, window=100, replicates=1, seed=13, threads=2)
        np.testing.assert_array_equal(serial.mean_slope, parallel.mean_slope)
        np.testing.assert_array_equal(
            serial.mean_slope_uniform, parallel.mean_slope_uniform
        )

    def test_pure_novelty_cell_nonnegative(self):
        base = ModelParams(p=0.0, q=0.0, seed_resources=10, seed_tags=10)
        result = sweep(2, base, users=600, window=300, replicates=2, seed=21, threads=1)
        assert result.mean_slope[0, 0] >= 0.0

    def test_validation(self):
        base = ModelParams(p=0.0, q=0.0)
        with pytest.raises(ValueError):
            sweep(1, base, users=100, window=50, replicates=1, seed=1)
        with pytest.raises(ValueError):
            sweep(2, base, users=100, window=200, replicates=1, seed=1)
        with pytest.raises(ValueError):
            sweep(2, base, users=100, window=50, replicates=0, seed=1)
