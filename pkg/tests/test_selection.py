import itertools
import math

import numpy as np
import pytest

from qvendi.selection import (
    BoxDomain,
    ContinuousOptConfig,
    GreedyConfig,
    batch_qvs,
    continuous_maximize,
    greedy_gain,
    greedy_select,
    greedy_select_kernel,
)
from qvendi.spectral import KernelSpec, build_kernel_matrix
from qvendi.vendi import ScoredSet, qvs_from_kernel

TOY = np.array([[1.0, 0.9, 0.0], [0.9, 1.0, 0.0], [0.0, 0.0, 1.0]])


def brute_force(kernel, scores, q, b):
    best = -math.inf
    for combo in itertools.combinations(range(len(scores)), b):
        idx = list(combo)
        best = max(best, qvs_from_kernel(kernel[np.ix_(idx, idx)], scores[idx], q))
    return best


class TestGreedy:
    def test_toy_picks_far_pair(self):
        chosen = greedy_select_kernel(TOY, np.ones(3), 1.0, 2)
        assert chosen == [0, 2]
        assert qvs_from_kernel(TOY[np.ix_(chosen, chosen)], np.ones(2), 1) == pytest.approx(2.0, abs=1e-9)
        near = qvs_from_kernel(TOY[:2, :2], np.ones(2), 1)
        assert near == pytest.approx(1.2196, abs=1e-4)

    def test_full_batch_returns_all(self):
        chosen = greedy_select_kernel(TOY, np.ones(3), 1.0, 3)
        assert sorted(chosen) == [0, 1, 2]
        assert chosen[:2] == [0, 2]

    def test_identical_points_pick_max_score(self):
        pool = ScoredSet(np.zeros((4, 2)), [0.3, 0.9, 0.9, 0.1])
        assert greedy_select(pool, KernelSpec.gaussian(1.0), 1.0, GreedyConfig(1)) == [1]

    def test_fixed_items_shape_choice(self):
        # with 0 fixed, the near-duplicate 1 is worth less than 2
        assert greedy_select_kernel(TOY, np.ones(3), 1.0, 1, fixed=[0]) == [2]

    def test_candidate_restriction(self):
        assert greedy_select_kernel(TOY, np.ones(3), 1.0, 1, candidates=[1]) == [1]

    def test_errors(self):
        with pytest.raises(ValueError):
            greedy_select_kernel(TOY, np.ones(3), 1.0, 4)
        with pytest.raises(ValueError):
            greedy_select_kernel(TOY, np.ones(3), 1.0, 1, fixed=[0], candidates=[0, 1])
        with pytest.raises(ValueError):
            greedy_select_kernel(TOY, [1.5, 1, 1], 1.0, 1)
        with pytest.raises(ValueError):
            GreedyConfig(0)
        with pytest.raises(ValueError):
            GreedyConfig(2, tie_break="random")

    def test_orthogonal_pools_are_exact(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            n = int(rng.integers(3, 9))
            s = rng.uniform(0, 1, n)
            b = int(rng.integers(1, min(3, n) + 1))
            for q in (0.0, 1.0, 2.0, math.inf):
                chosen = greedy_select_kernel(np.eye(n), s, q, b)
                got = qvs_from_kernel(np.eye(b), s[chosen], q)
                assert got == pytest.approx(brute_force(np.eye(n), s, q, b), abs=1e-12)

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        k = build_kernel_matrix(KernelSpec.gaussian(0.5), rng.normal(size=(10, 2)))
        s = rng.uniform(size=10)
        assert greedy_select_kernel(k, s, 1, 4) == greedy_select_kernel(k, s, 1, 4)


class TestGreedyGain:
    def setup_method(self):
        self.pool = ScoredSet([[0.0], [0.459], [100.0]], [1.0, 1.0, 1.0])
        self.spec = KernelSpec.gaussian(1.0)

    def test_singleton_gain_is_score(self):
        pool = ScoredSet([[0.0], [5.0]], [0.4, 0.7])
        assert greedy_gain(pool, self.spec, 1.0, [], 1) == pytest.approx(0.7)

    def test_far_item_gain(self):
        assert greedy_gain(self.pool, self.spec, 1.0, [0], 2) == pytest.approx(1.0, abs=1e-9)

    def test_duplicate_gain_nonpositive(self):
        pool = ScoredSet([[0.0], [0.0], [3.0]], [1.0, 1.0, 1.0])
        assert greedy_gain(pool, self.spec, 1.0, [0, 2], 1) <= 1e-12

    def test_errors(self):
        with pytest.raises(ValueError):
            greedy_gain(self.pool, self.spec, 1.0, [0], 0)
        with pytest.raises(IndexError):
            greedy_gain(self.pool, self.spec, 1.0, [0], 7)


class TestBoxDomain:
    def test_round_trip(self):
        d = BoxDomain([-1, 0], [1, 4])
        x = np.array([0.5, 3.0])
        np.testing.assert_allclose(d.from_unit(d.to_unit(x)), x)
        assert d.contains(x) and not d.contains([2, 0])
        assert d.diameter == pytest.approx(math.sqrt(20))

    @pytest.mark.parametrize("lo,hi", [([0, 0], [1]), ([1], [0]), ([0], [math.inf]), ([], [])])
    def test_invalid(self, lo, hi):
        with pytest.raises(ValueError):
            BoxDomain(lo, hi)


def gaussian_score(x):
    return float(np.exp(-0.5 * np.sum(np.asarray(x) ** 2)))


class TestContinuous:
    def test_single_point_goes_to_peak(self):
        dom = BoxDomain([-1, -1], [1, 1])
        x = continuous_maximize(KernelSpec.gaussian(0.5), gaussian_score, dom, 1, 1.0, ContinuousOptConfig(restarts=3))
        assert x.shape == (1, 2)
        assert np.linalg.norm(x[0]) < 1e-3

    def test_diversity_only_spreads_points(self):
        dom = BoxDomain([-1], [1])
        x = continuous_maximize(KernelSpec.gaussian(1.0), lambda p: 1.0, dom, 2, 1.0, ContinuousOptConfig(restarts=3))
        assert abs(x[0, 0] - x[1, 0]) > 1.5

    def test_feasible_and_deterministic(self):
        dom = BoxDomain([-1, -1], [1, 1])
        cfg = ContinuousOptConfig(restarts=2, max_iters=50, seed=3)
        a = continuous_maximize(KernelSpec.gaussian(0.3), gaussian_score, dom, 4, 1.0, cfg)
        b = continuous_maximize(KernelSpec.gaussian(0.3), gaussian_score, dom, 4, 1.0, cfg)
        np.testing.assert_array_equal(a, b)
        assert np.all(a >= -1) and np.all(a <= 1)

    def test_fd_step_insensitive(self):
        dom = BoxDomain([-1, -1], [1, 1])
        spec = KernelSpec.gaussian(0.5)
        vals = []
        for h in (1e-5, 2e-5):
            x = continuous_maximize(spec, gaussian_score, dom, 3, 1.0, ContinuousOptConfig(restarts=2, fd_step=h))
            vals.append(batch_qvs(spec, x, np.array([gaussian_score(p) for p in x]), 1.0))
        assert abs(vals[0] - vals[1]) < 1e-4

    def test_rejects_non_finite_score(self):
        with pytest.raises(ValueError):
            continuous_maximize(KernelSpec(), lambda p: math.nan, BoxDomain([0], [1]), 1, 1.0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ContinuousOptConfig(restarts=0)
        with pytest.raises(ValueError):
            ContinuousOptConfig(fd_step=0)
