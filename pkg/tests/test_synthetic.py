
import numpy as np
import pytest

from qvendi.synthetic import (
    GENERATORS,
    gen_synthetic,
    initial_design,
    multi_peak_continuous,
    ring_of_clusters_binary,
    two_cluster_binary,
    two_group_discrete_pool,
)


def test_two_cluster_positive_count_and_clusters():
    pr = two_cluster_binary(seed=0, pool_size=1000, positive_rate=0.1)
    assert pr.truth.sum() == 100
    assert np.all(pr.points >= 0) and np.all(pr.points <= 1)
    pos = pr.truth == 1
    assert set(pr.cluster_of[pos].tolist()) == {0, 1}
    assert np.all(pr.cluster_of[~pos] == -1)


def test_positive_count_floors():
    assert two_cluster_binary(seed=0, pool_size=25, positive_rate=0.3).truth.sum() == 7
    assert ring_of_clusters_binary(seed=0, pool_size=100, positive_rate=0.15).truth.sum() == 15


@pytest.mark.parametrize("kw", [dict(positive_rate=0.0), dict(positive_rate=1.0), dict(pool_size=1), dict(spread=0.0),
                                dict(pool_size=10, positive_rate=0.1)])
def test_invalid_pools(kw):
    with pytest.raises(ValueError):
        two_cluster_binary(**kw)


def test_peak_heights():
    pr = multi_peak_continuous()
    for c in pr.peak_centers:
        assert pr.oracle(c) == pytest.approx(1.0, abs=1e-6)
    single = multi_peak_continuous(centers=[[0.0, 0.0]], heights=[1.0], lower=(-1, -1), upper=(1, 1))
    assert single.oracle(np.zeros(2)) == 1.0


def test_discrete_pool_groups():
    pr = two_group_discrete_pool(seed=1)
    assert pr.mode == "real-valued-pool"
    assert set(pr.cluster_of.tolist()) <= {-1, 0, 1}
    best = np.argmax(pr.truth)
    assert pr.cluster_of[best] >= 0


@pytest.mark.parametrize("name", GENERATORS)
def test_deterministic(name):
    a, b = gen_synthetic(name, seed=3), gen_synthetic(name, seed=3)
    if a.points is not None:
        np.testing.assert_array_equal(a.points, b.points)
        np.testing.assert_array_equal(a.truth, b.truth)
        assert not np.array_equal(a.points, gen_synthetic(name, seed=4).points)


def test_gen_synthetic_errors():
    with pytest.raises(ValueError):
        gen_synthetic("nope")
    with pytest.raises(TypeError):
        gen_synthetic("two-cluster-binary", {"bogus": 1})


def test_initial_design():
    pool = two_cluster_binary(seed=0, pool_size=50, positive_rate=0.2)
    idx = initial_design(pool, 10, 7)
    assert idx == sorted(set(idx)) and len(idx) == 10 and idx == initial_design(pool, 10, 7)
    pts = initial_design(multi_peak_continuous(), 5, 1)
    assert len(pts) == 5 and all(np.all((p >= 0) & (p <= 1)) for p in pts)
    with pytest.raises(ValueError):
        initial_design(pool, 51, 0)
