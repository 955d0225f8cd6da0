"""Tabular Q-learning: update rule, policy, training and greedy read-out."""

import itertools

import numpy as np
import pytest

from frisim.channel import LinkBudget, RngStream, draw_channels, psd_factor
from frisim.errors import DomainError, FeasibilityError
from frisim.geometry import CorrelationKernel, SurfaceGeometry, build_grid, correlation_matrix
from frisim.qlearn import (
    LearnParams,
    QTable,
    SumPowerReward,
    epsilon_greedy,
    extract_greedy,
    q_update,
    trace_to_csv,
    train,
    train_batch,
)

LAM = 0.125
UNIT = LinkBudget(1.0, 1.0, 1.0, 1.0)


def aligned_contrib(grid, geo, seed, n_ant=2):
    """Phase-aligned per-candidate amplitudes ``(M, K, 1)`` for one realization."""
    f = psd_factor(correlation_matrix(grid.points, CorrelationKernel("paper_literal", LAM)))
    ch = draw_channels(f, UNIT, n_ant, np.random.default_rng(seed))
    amp = np.abs(ch.h2b) * np.abs(ch.g @ (np.ones(n_ant) / np.sqrt(n_ant)))
    return amp[grid.members][..., None]


class TableReward:
    def __init__(self, table):
        self.table = table

    def __call__(self, local):
        return float(self.table[tuple(local)])


class TestQUpdate:
    def test_from_zero(self):
        q = QTable.zeros(2, 3)
        q_update(q, (0, 1), 2, 1.0, (1, 0), LearnParams())
        assert q.values[0, 1, 2] == pytest.approx(0.1)
        assert q.visits[0, 1, 2] == 1
        assert np.count_nonzero(q.values) == 1

    def test_zero_td_no_change(self):
        q = np.zeros((1, 2, 2))
        q[0, 0, 1] = 0.7
        q_update(q, (0, 0), 1, 0.0, (0, 0), LearnParams(delta=1.0))
        assert q[0, 0, 1] == 0.7

    def test_full_replacement(self):
        q = np.zeros((1, 2, 2))
        q[0, 1] = [0.5, 2.0]
        q_update(q, (0, 0), 0, 3.0, (0, 1), LearnParams(alpha=1.0, delta=0.9))
        assert q[0, 0, 0] == pytest.approx(3.0 + 0.9 * 2.0)

    def test_bad_index(self):
        with pytest.raises(DomainError):
            q_update(np.zeros((1, 2, 2)), (0, 5), 0, 1.0, (0, 0), LearnParams())

    def test_param_ranges(self):
        for kw in ({"alpha": 0.0}, {"delta": 1.5}, {"epsilon": -0.1}, {"episodes": 0}):
            with pytest.raises(DomainError):
                LearnParams(**kw)


class TestEpsilonGreedy:
    def test_greedy(self):
        q = np.zeros((1, 1, 4))
        q[0, 0, 2] = 1.0
        rng = np.random.default_rng(0)
        assert all(epsilon_greedy(q, (0, 0), 0.0, rng) == 2 for _ in range(50))

    def test_tie_lowest_index(self):
        assert epsilon_greedy(np.ones((1, 1, 4)), (0, 0), 0.0, 0) == 0

    def test_uniform_exploration(self):
        rng = np.random.default_rng(1)
        q = np.zeros((1, 1, 5))
        q[0, 0, 0] = 10.0
        mask = np.array([True, True, False, True, True])
        n = 100_000
        counts = np.bincount([epsilon_greedy(q, (0, 0), 1.0, rng, mask) for _ in range(n)], minlength=5)
        assert counts[2] == 0
        exp = n / 4
        chi2 = (((counts[mask] - exp) ** 2) / exp).sum()
        assert chi2 < 16.27  # 99.9% quantile, 3 degrees of freedom
        assert (np.abs(counts[mask] - exp) <= 3 * np.sqrt(exp * 0.75)).all()

    def test_single_feasible(self):
        q = np.arange(4.0).reshape(1, 1, 4)
        mask = np.array([True, False, False, False])
        rng = np.random.default_rng(2)
        assert {epsilon_greedy(q, (0, 0), e, rng, mask) for e in (0.0, 0.5, 1.0) for _ in range(20)} == {0}

    def test_no_feasible(self):
        with pytest.raises(FeasibilityError):
            epsilon_greedy(np.zeros((1, 1, 2)), (0, 0), 0.1, 0, np.zeros(2, dtype=bool))


class TestTrain:
    def test_single_element_finds_best_candidate(self):
        geo = SurfaceGeometry(1, 1, 2, 2, 0.01, 0.01, LAM)
        grid = build_grid(geo)
        reward = TableReward(np.array([0.2, 0.5, 0.1, 1.0]))
        q, _ = train(grid, reward, LearnParams(episodes=50), RngStream(0, 0))
        assert extract_greedy(q, grid).positions == (3,)

    def test_constant_reward_terminates_feasible(self):
        geo = SurfaceGeometry(1, 1, 4, 2, 0.01, 0.01, LAM, 2, 1)
        grid = build_grid(geo)
        q, trace = train(grid, lambda local: 1.0, LearnParams(episodes=30, convergence_window=5), RngStream(1, 0))
        assert len(trace) <= 30
        extract_greedy(q, grid).validate(grid, geo.pitch)

    def test_trace_nondecreasing_and_csv(self):
        geo = SurfaceGeometry(0.5, 0.375, 6, 4, 0.04, 0.04, LAM, 3, 1)
        grid = build_grid(geo)
        rew = SumPowerReward(aligned_contrib(grid, geo, 3))
        _, trace = train(grid, rew, LearnParams(episodes=60), RngStream(3, 0))
        best = [b for _, b in trace]
        assert all(b2 >= b1 for b1, b2 in zip(best, best[1:]))
        text = trace_to_csv(trace)
        lines = text.splitlines()
        assert lines[0] == "episode,best_reward"
        assert len(lines) == len(trace) + 1
        assert float(lines[-1].split(",")[1]) == best[-1]

    def test_deterministic(self):
        geo = SurfaceGeometry(0.5, 0.375, 6, 4, 0.04, 0.04, LAM, 3, 1)
        grid = build_grid(geo)
        rew = SumPowerReward(aligned_contrib(grid, geo, 4))
        a, _ = train(grid, rew, LearnParams(episodes=20), RngStream(9, 0))
        b, _ = train(grid, rew, LearnParams(episodes=20), RngStream(9, 0))
        np.testing.assert_array_equal(a.values, b.values)

    def test_two_elements_match_brute_force(self):
        # M=2, N=8: two subareas of four candidates each
        geo = SurfaceGeometry(0.3, 0.1, 4, 2, 0.04, 0.04, LAM, 2, 1)
        grid = build_grid(geo)
        hits = 0
        for seed in range(10):
            rew = SumPowerReward(aligned_contrib(grid, geo, 100 + seed))
            opt = max(rew(p) for p in itertools.product(range(4), repeat=2))
            q, _ = train(grid, rew, LearnParams(), RngStream(seed, 0))
            got = rew(grid.local[list(extract_greedy(q, grid).positions)])
            hits += got >= opt * (1 - 1e-12)
        assert hits >= 9


class TestExtractGreedy:
    def geo(self):
        return SurfaceGeometry(0.3, 0.0, 4, 1, 0.04, 0.04, LAM, 2, 1)

    def test_strict_maximizers(self):
        grid = build_grid(self.geo())
        q = np.zeros((2, 2, 2))
        q[0, :, 0] = 1.0
        q[1, :, 1] = 1.0
        assert extract_greedy(q, grid, min_spacing=0.0).positions == (0, 3)

    def test_spacing_conflict_takes_second_choice(self):
        grid = build_grid(self.geo())  # x = 0, 0.1, 0.2, 0.3
        q = np.zeros((2, 2, 2))
        q[0, :, 1] = 1.0  # x = 0.1
        q[1, :, 0] = 1.0  # x = 0.2, too close
        q[1, :, 1] = 0.5
        assert extract_greedy(q, grid, min_spacing=0.15).positions == (1, 3)

    def test_infeasible(self):
        grid = build_grid(self.geo())
        with pytest.raises(FeasibilityError):
            extract_greedy(np.zeros((2, 2, 2)), grid, min_spacing=1.0)

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            extract_greedy(np.zeros((3, 2, 2)), build_grid(self.geo()))


class TestTrainBatch:
    def test_engines_identical(self):
        rng = np.random.default_rng(5)
        contrib = rng.standard_normal((6, 4, 5, 2)) + 1j * rng.standard_normal((6, 4, 5, 2))
        params = LearnParams(episodes=5, steps_per_episode=40)
        a = train_batch(contrib, params, RngStream(1, 0), engine="numba")
        b = train_batch(contrib, params, RngStream(1, 0), engine="numpy")
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_allclose(a[1], b[1], rtol=1e-12)

    def test_near_optimal_on_aligned_rewards(self):
        rng = np.random.default_rng(6)
        amp = rng.rayleigh(size=(20, 3, 8, 1))
        chosen, _ = train_batch(amp, LearnParams(episodes=30), RngStream(2, 0))
        opt = amp[..., 0].max(axis=2).sum(axis=1) ** 2
        got = amp[np.arange(20)[:, None], np.arange(3)[None, :], chosen, 0].sum(axis=1) ** 2
        assert np.mean(got >= 0.9 * opt) >= 0.9

    def test_unknown_engine(self):
        with pytest.raises(DomainError):
            train_batch(np.ones((1, 1, 2, 1)), LearnParams(), 0, engine="gpu")
