import math

import numpy as np
import pytest

from qvendi.campaigns import CampaignLog, Query
from qvendi.evaluation import (
    aggregate,
    best_value,
    column_best,
    diagonal_ranks,
    eval_kernel_logdet,
    eval_max_pairwise_distance,
    eval_threshold_discoveries,
    eval_vs_of_positives,
    incumbent_trace,
    kernel_logdet,
    mean_stderr,
    peaks_covered,
    run_metrics,
)
from qvendi.spectral import KernelSpec

EYE_LIKE = KernelSpec.gaussian(1e-3)  # distinct points are effectively orthogonal


def make_log(points, obs, mode="binary-pool"):
    log = CampaignLog("random", None, mode)
    for i, (p, y) in enumerate(zip(points, obs)):
        log.append(Query(1, i if mode != "continuous-function" else None, np.asarray(p, float), float(y)))
    return log


class TestVsOfPositives:
    def test_no_positives(self):
        assert eval_vs_of_positives(make_log([[0.0], [1.0]], [0, 0]), EYE_LIKE) == 0.0

    def test_orthogonal_positives(self):
        log = make_log([[0.0], [1.0], [2.0], [3.0]], [1, 1, 1, 0])
        assert eval_vs_of_positives(log, EYE_LIKE, 1.0) == pytest.approx(3.0, abs=1e-9)

    def test_toy_pair(self):
        # two orthogonal positives from the 3-item toy set
        log = make_log([[0.0], [0.459], [100.0]], [1, 0, 1])
        assert eval_vs_of_positives(log, KernelSpec.gaussian(1.0), 1.0) == pytest.approx(2.0, abs=1e-9)

    def test_q0_counts_distinct(self):
        log = make_log([[0.0], [0.0], [5.0], [9.0]], [1, 1, 1, 1])
        assert eval_vs_of_positives(log, KernelSpec.gaussian(1.0), 0.0) == 3.0


class TestDistances:
    def test_three_four_five(self):
        assert eval_max_pairwise_distance(make_log([[0, 0], [3, 4]], [1, 1])) == pytest.approx(5.0)

    def test_single(self):
        assert eval_max_pairwise_distance(make_log([[0, 0], [3, 4]], [1, 0])) == 0.0

    def test_collinear(self):
        assert eval_max_pairwise_distance(make_log([[0.0], [1.0], [2.0]], [1, 1, 1])) == pytest.approx(2.0)


class TestLogdet:
    def test_identity(self):
        assert kernel_logdet(np.eye(3)) == pytest.approx(0.0, abs=1e-12)
        log = make_log([[0.0], [1.0], [2.0]], [1, 1, 1])
        assert math.exp(eval_kernel_logdet(log, EYE_LIKE)) == pytest.approx(1.0)

    def test_duplicate_is_sentinel(self):
        log = make_log([[0.0], [0.0]], [1, 1])
        assert eval_kernel_logdet(log, EYE_LIKE) == -math.inf
        assert run_metrics(log, EYE_LIKE, [1.0])[("kernel_det", None)] == 0.0

    def test_two_by_two(self):
        assert math.exp(kernel_logdet(np.array([[1, 0.5], [0.5, 1]]))) == pytest.approx(0.75, abs=1e-12)

    def test_no_positives(self):
        assert eval_kernel_logdet(make_log([[0.0]], [0]), EYE_LIKE) == -math.inf


class TestThreshold:
    def setup_method(self):
        self.log = make_log([[0.0], [1.0], [2.0]], [0.2, 0.9, 0.8], mode="real-valued-pool")

    def test_above_all(self):
        assert eval_threshold_discoveries(self.log, 5.0, EYE_LIKE) == 0.0

    def test_below_all(self):
        assert eval_threshold_discoveries(self.log, -1e300, EYE_LIKE, 1.0) == pytest.approx(3.0, abs=1e-9)

    def test_two_qualify(self):
        assert eval_threshold_discoveries(self.log, 0.5, EYE_LIKE, 1.0) == pytest.approx(2.0, abs=1e-9)


class TestTraces:
    def test_best_and_incumbent(self):
        log = make_log([[0.0], [1.0], [2.0]], [0.3, 0.1, 0.7], mode="real-valued-pool")
        assert best_value(log) == 0.7
        np.testing.assert_array_equal(incumbent_trace(log), [0.3, 0.3, 0.7])

    def test_peaks_covered(self):
        centers = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        assert peaks_covered(np.array([[0.1, 0.0], [0.05, 0.1], [0.9, 0.9]]), centers) == 2
        assert peaks_covered(np.array([[0.5, 0.45]]), centers, radius=0.1) == 0
        assert peaks_covered(np.zeros((0, 2)), centers) == 0


class TestAggregate:
    def test_mean_stderr(self):
        assert mean_stderr([5.0]) == (5.0, 0.0)
        assert mean_stderr([2.0, 4.0]) == pytest.approx((3.0, 1.0))
        with pytest.raises(ValueError):
            mean_stderr([])

    def test_column_best_ties(self):
        assert column_best([3.0, 3.0, 2.0]) == [True, True, False]

    def test_report(self):
        runs = {
            ("a", 1.0): [{("vs", 1.0): 2.0}, {("vs", 1.0): 4.0}],
            ("b", None): [{("vs", 1.0): 3.0}, {("vs", 1.0): 3.0}],
            ("c", None): [{("vs", 1.0): 1.0}, {("vs", 1.0): 2.0}],
        }
        rep = aggregate(runs, [1.0], [1.0])
        a, b, c = (rep.cells[k][("vs", 1.0)] for k in runs)
        assert (a.mean, a.stderr, a.n) == (3.0, 1.0, 2)
        assert (a.best, b.best, c.best) == (True, True, False)
        with pytest.raises(ValueError):
            aggregate({})

    def test_diagonal_ranks(self):
        qs = [0.0, 1.0, math.inf]
        grid = {0.0: [3, 1, 1], 1.0: [2, 3, 2], math.inf: [1, 2, 3]}
        runs = {("qvs-as", qp): [{("vs", qe): float(v) for qe, v in zip(qs, row)}] for qp, row in grid.items()}
        rep = aggregate(runs, qs, qs)
        assert diagonal_ranks(rep, "qvs-as") == {"0": 1, "1": 1, "inf": 1}
        assert rep.cross_q("qvs-as")[(1.0, math.inf)].mean == 2.0


class TestRunMetrics:
    def test_binary_keys(self):
        log = make_log([[0.0], [1.0]], [1, 1])
        m = run_metrics(log, EYE_LIKE, [0.0, 1.0])
        assert m[("vs", 0.0)] == 2.0 and m[("positives", None)] == 2.0
        assert m[("effective_discoveries", 1.0)] == pytest.approx(2.0)

    def test_continuous_keys(self):
        log = make_log([[0.0, 0.0], [1.0, 1.0]], [0.5, 0.9], mode="continuous-function")
        log.solutions = np.array([[1.0, 1.0]])
        m = run_metrics(log, EYE_LIKE, [1.0], threshold=0.6, peak_centers=np.array([[1.0, 1.0], [0.0, 0.0]]))
        assert m[("best_value", None)] == 0.9
        assert m[("threshold_vs", 1.0)] == pytest.approx(1.0)
        assert m[("peaks_covered", None)] == 1.0

    def test_bit_for_bit(self):
        rng = np.random.default_rng(0)
        log = make_log(rng.uniform(size=(12, 2)), rng.integers(0, 2, 12))
        spec = KernelSpec.gaussian(0.3)
        assert run_metrics(log, spec, [0.5, 2.0]) == run_metrics(log, spec, [0.5, 2.0])
