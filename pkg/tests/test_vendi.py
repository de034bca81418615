import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qvendi.spectral import KernelSpec, build_kernel_matrix
from qvendi.vendi import (
    ScoredSet,
    format_order,
    parse_order,
    quality_weighted_vendi_score,
    qvs_from_kernel,
    vendi_score,
    vendi_score_of_subset,
    vs_from_normalized,
)

RHO = np.array([[1.0, 0.5], [0.5, 1.0]])
Q_GRID = [0.0, 0.1, 0.5, 1.0, 2.0, math.inf]

point_sets = st.integers(1, 9).flatmap(
    lambda n: arrays(np.float64, (n, 2), elements=st.floats(-2, 2, allow_nan=False))
)


def shannon_2x2():
    lam = np.array([0.75, 0.25])
    return math.exp(-np.sum(lam * np.log(lam)))


class TestOrders:
    @pytest.mark.parametrize("token,expected", [("inf", math.inf), ("INF", math.inf), ("0.5", 0.5), (2, 2.0), ("0", 0.0)])
    def test_parse(self, token, expected):
        assert parse_order(token) == expected

    @pytest.mark.parametrize("token", ["-1", "abc", "nan", ""])
    def test_parse_rejects(self, token):
        with pytest.raises(ValueError):
            parse_order(token)

    def test_format_round_trip(self):
        for q in Q_GRID:
            assert parse_order(format_order(q)) == q
        assert format_order(math.inf) == "inf"
        assert format_order(1.0) == "1"


class TestVendiScore:
    def test_identity_is_n(self):
        assert vendi_score(np.eye(3), 1) == pytest.approx(3.0, abs=1e-9)
        for n in (1, 4, 7):
            assert vendi_score(np.eye(n), math.inf) == pytest.approx(n, abs=1e-9)

    def test_all_ones_is_one(self):
        for q in Q_GRID:
            assert vendi_score(np.ones((4, 4)), q) == pytest.approx(1.0, abs=1e-9)

    def test_two_by_two_closed_forms(self):
        assert vendi_score(RHO, 1) == pytest.approx(1.754765, abs=1e-6)
        assert vendi_score(RHO, 1) == pytest.approx(shannon_2x2(), abs=1e-12)
        assert vendi_score(RHO, 2) == pytest.approx(1.6, abs=1e-12)
        assert vendi_score(RHO, math.inf) == pytest.approx(4 / 3, abs=1e-12)
        assert vendi_score(RHO, 0) == 2.0

    def test_empty(self):
        assert vendi_score(np.zeros((0, 0)), 1) == 0.0
        assert vs_from_normalized(np.zeros((3, 0)), 1).tolist() == [0.0, 0.0, 0.0]

    def test_order_zero_counts_rank(self):
        # exact duplicate: the count drops to the matrix rank
        k = build_kernel_matrix(KernelSpec.gaussian(1.0), [[0, 0], [0, 0], [5, 5]])
        assert vendi_score(k, 0) == 2.0

    def test_shannon_routing_near_one(self):
        assert vendi_score(RHO, 1 + 1e-10) == vendi_score(RHO, 1.0)

    def test_near_one_continuity(self):
        for eps in (1e-4, -1e-4):
            assert vendi_score(RHO, 1 + eps) == pytest.approx(vendi_score(RHO, 1), abs=1e-3)

    def test_stack(self):
        lam = np.array([[0.75, 0.25], [0.5, 0.5], [1.0, 0.0]])
        np.testing.assert_allclose(vs_from_normalized(lam, 2), [1.6, 2.0, 1.0])

    @settings(max_examples=80, deadline=None)
    @given(point_sets, st.floats(0.05, 3.0))
    def test_bounds_and_monotone_in_q(self, pts, ell):
        k = build_kernel_matrix(KernelSpec.gaussian(ell), pts)
        values = [vendi_score(k, q) for q in Q_GRID]
        n = len(pts)
        for v in values:
            assert 1.0 - 1e-8 <= v <= n + 1e-8
        for a, b in zip(values, values[1:]):
            assert b <= a + 1e-8

    @settings(max_examples=60, deadline=None)
    @given(point_sets, st.floats(0.1, 2.0), st.sampled_from([1.0, 1.5, 2.0, math.inf]))
    def test_duplicate_keeps_score_bounded(self, pts, ell, q):
        spec = KernelSpec.gaussian(ell)
        k = build_kernel_matrix(spec, np.vstack([pts, pts[:1]]))
        dup = vendi_score(k, q)
        assert math.isfinite(dup) and dup >= 1.0 - 1e-9
        assert dup <= vendi_score(k, 0) + 1e-8  # never above the distinct count

    def test_duplicate_leaves_order_zero_unchanged(self):
        pts = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]])
        spec = KernelSpec.gaussian(1.0)
        a = vendi_score(build_kernel_matrix(spec, pts), 0)
        b = vendi_score(build_kernel_matrix(spec, np.vstack([pts, pts[1:2]])), 0)
        assert a == b == 3.0

    @pytest.mark.parametrize("q", [1.0, 2.0, math.inf])
    def test_duplicate_of_orthogonal_set_lowers_score(self, q):
        pts = np.array([[0.0], [50.0], [100.0]])
        spec = KernelSpec.gaussian(1.0)
        a = vendi_score(build_kernel_matrix(spec, pts), q)
        b = vendi_score(build_kernel_matrix(spec, np.vstack([pts, pts[:1]])), q)
        assert 1.0 <= b < a

    def test_duplicate_can_raise_score_of_unbalanced_set(self):
        # {a, b, b} + a is the balanced {a, a, b, b}
        pts = np.array([[0.0, 1.0], [1.0, 1.0], [1.0, 1.0]])
        spec = KernelSpec.gaussian(1.0)
        a = vendi_score(build_kernel_matrix(spec, pts), 1)
        b = vendi_score(build_kernel_matrix(spec, np.vstack([pts, pts[:1]])), 1)
        assert b > a

    def test_permutation_invariance(self):
        rng = np.random.default_rng(4)
        pts = rng.normal(size=(8, 2))
        spec = KernelSpec.gaussian(0.7)
        perm = rng.permutation(8)
        for q in Q_GRID:
            a = vendi_score(build_kernel_matrix(spec, pts), q)
            b = vendi_score(build_kernel_matrix(spec, pts[perm]), q)
            assert a == pytest.approx(b, abs=1e-10)


class TestQualityWeighted:
    def test_identity_scores(self):
        s = ScoredSet([[0.0], [100.0]], [1.0, 0.5])
        assert quality_weighted_vendi_score(s, KernelSpec.gaussian(1.0), 1) == pytest.approx(1.5, abs=1e-12)

    def test_unit_scores_equal_vs(self):
        rng = np.random.default_rng(5)
        pts = rng.normal(size=(6, 2))
        spec = KernelSpec.gaussian(0.9)
        for q in Q_GRID:
            qvs = quality_weighted_vendi_score(ScoredSet(pts, np.ones(6)), spec, q)
            assert qvs == vendi_score(build_kernel_matrix(spec, pts), q)

    def test_all_ones_kernel(self):
        assert qvs_from_kernel(np.ones((2, 2)), [0.2, 0.2], 1) == pytest.approx(0.2, abs=1e-12)

    def test_empty(self):
        assert quality_weighted_vendi_score(ScoredSet([], []), KernelSpec(), 1) == 0.0

    @settings(max_examples=60, deadline=None)
    @given(point_sets, st.data())
    def test_factorization(self, pts, data):
        scores = np.array(data.draw(st.lists(st.floats(0, 1), min_size=len(pts), max_size=len(pts))))
        spec = KernelSpec.gaussian(0.8)
        k = build_kernel_matrix(spec, pts)
        for q in (0.0, 1.0, 2.0, math.inf):
            assert quality_weighted_vendi_score(ScoredSet(pts, scores), spec, q) == scores.mean() * vendi_score(k, q)

    def test_quality_monotone(self):
        rng = np.random.default_rng(6)
        k = build_kernel_matrix(KernelSpec.gaussian(0.5), rng.normal(size=(5, 2)))
        s = rng.uniform(0, 0.9, size=5)
        for i in range(5):
            raised = s.copy()
            raised[i] += 0.05
            assert qvs_from_kernel(k, raised, 1) > qvs_from_kernel(k, s, 1)

    @pytest.mark.parametrize("scores", [[1.2, 0.5], [-0.1, 0.5], [math.nan, 0.5]])
    def test_rejects_bad_scores(self, scores):
        with pytest.raises(ValueError):
            ScoredSet([[0.0], [1.0]], scores)

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            ScoredSet([[0.0], [1.0]], [0.5])


class TestSubset:
    def setup_method(self):
        rng = np.random.default_rng(7)
        self.pts = rng.normal(size=(5, 2))
        self.spec = KernelSpec.gaussian(1.0)
        self.k = build_kernel_matrix(self.spec, self.pts)

    def test_full_set(self):
        assert vendi_score_of_subset(self.k, range(5), 1) == vendi_score(self.k, 1)

    def test_singleton(self):
        assert vendi_score_of_subset(self.k, [3], 1) == pytest.approx(1.0, abs=1e-12)

    def test_pair_matches_rebuild(self):
        fresh = build_kernel_matrix(self.spec, self.pts[[1, 4]])
        assert vendi_score_of_subset(self.k, [1, 4], 1) == pytest.approx(vendi_score(fresh, 1), abs=1e-10)

    def test_errors(self):
        with pytest.raises(IndexError):
            vendi_score_of_subset(self.k, [0, 5])
        with pytest.raises(ValueError):
            vendi_score_of_subset(self.k, [1, 1])
