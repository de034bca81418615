"""Seeded desk-scale benchmark problems."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .campaigns.core import FunctionOracle, PoolOracle
from .selection import BoxDomain

GENERATORS = (
    "two-cluster-binary",
    "ring-of-clusters-binary",
    "multi-peak-continuous",
    "two-group-discrete-pool",
)


@dataclass
class Problem:
    name: str
    mode: str
    points: Optional[np.ndarray] = None
    truth: Optional[np.ndarray] = None
    domain: Optional[BoxDomain] = None
    params: dict = field(default_factory=dict)
    cluster_of: Optional[np.ndarray] = None  # per-row cluster id, -1 for background
    peak_centers: Optional[np.ndarray] = None
    peak_radius: Optional[float] = None

    @property
    def oracle(self):
        if self.mode == "continuous-function":
            return FunctionOracle(self._objective, self.domain)
        return PoolOracle(self.points, self.truth, binary=self.mode == "binary-pool")

    def _objective(self, x):
        p = self.params
        return bump_sum(np.asarray(x, float), np.asarray(p["centers"], float), np.asarray(p["heights"], float), p["width"])


def bump_sum(x: np.ndarray, centers: np.ndarray, heights: np.ndarray, width: float) -> float:
    d2 = np.sum((centers - x) ** 2, axis=1)
    return float(np.sum(heights * np.exp(-d2 / (2.0 * width**2))))


def _check_rate(rate):
    if not 0.0 < rate < 1.0:
        raise ValueError(f"positive_rate must lie in (0, 1), got {rate}")


def _clustered_pool(rng, pool_size, rate, centers, spread):
    _check_rate(rate)
    if pool_size < 2:
        raise ValueError("pool_size must be >= 2")
    if spread <= 0:
        raise ValueError("spread must be positive")
    centers = np.asarray(centers, dtype=float)
    k, dim = centers.shape
    n_pos = int(math.floor(rate * pool_size))
    if n_pos < k:
        raise ValueError(f"{n_pos} positives cannot populate {k} clusters")
    per = np.full(k, n_pos // k)
    per[: n_pos % k] += 1
    pos = np.vstack([np.clip(rng.normal(c, spread, size=(m, dim)), 0.0, 1.0) for c, m in zip(centers, per)])
    cluster = np.repeat(np.arange(k), per)
    neg = rng.uniform(size=(pool_size - n_pos, dim))
    points = np.vstack([pos, neg])
    labels = np.concatenate([np.ones(n_pos), np.zeros(pool_size - n_pos)])
    cluster_of = np.concatenate([cluster, np.full(pool_size - n_pos, -1)])
    order = rng.permutation(pool_size)
    return points[order], labels[order], cluster_of[order]


def two_cluster_binary(
    seed: int = 0,
    pool_size: int = 1000,
    positive_rate: float = 0.1,
    centers=((0.2, 0.2), (0.8, 0.8)),
    spread: float = 0.1,
) -> Problem:
    rng = np.random.default_rng(seed)
    points, labels, cluster_of = _clustered_pool(rng, pool_size, positive_rate, centers, spread)
    params = dict(pool_size=pool_size, positive_rate=positive_rate, centers=np.asarray(centers).tolist(), spread=spread)
    return Problem("two-cluster-binary", "binary-pool", points, labels, params=params, cluster_of=cluster_of)


def ring_of_clusters_binary(
    seed: int = 0,
    pool_size: int = 600,
    positive_rate: float = 0.15,
    n_clusters: int = 6,
    radius: float = 0.35,
    spread: float = 0.04,
) -> Problem:
    angles = 2.0 * math.pi * np.arange(n_clusters) / n_clusters
    centers = 0.5 + radius * np.column_stack([np.cos(angles), np.sin(angles)])
    rng = np.random.default_rng(seed)
    points, labels, cluster_of = _clustered_pool(rng, pool_size, positive_rate, centers, spread)
    params = dict(pool_size=pool_size, positive_rate=positive_rate, n_clusters=n_clusters, radius=radius, spread=spread)
    return Problem("ring-of-clusters-binary", "binary-pool", points, labels, params=params, cluster_of=cluster_of)


def multi_peak_continuous(
    seed: int = 0,
    centers=((0.2, 0.25), (0.8, 0.2), (0.5, 0.8)),
    heights=(1.0, 1.0, 1.0),
    width: float = 0.1,
    lower=(0.0, 0.0),
    upper=(1.0, 1.0),
) -> Problem:
    centers = np.asarray(centers, dtype=float)
    heights = np.asarray(heights, dtype=float)
    if centers.ndim != 2 or heights.shape != (centers.shape[0],):
        raise ValueError("need one height per peak center")
    if width <= 0:
        raise ValueError("width must be positive")
    domain = BoxDomain(lower, upper)
    if centers.shape[1] != domain.dim:
        raise ValueError("peak centers must match the domain dimension")
    params = dict(centers=centers.tolist(), heights=heights.tolist(), width=width,
                  lower=domain.lower.tolist(), upper=domain.upper.tolist())
    # seed is accepted for interface uniformity; the objective is deterministic
    return Problem("multi-peak-continuous", "continuous-function", domain=domain, params=params,
                   peak_centers=centers, peak_radius=width)


def two_group_discrete_pool(
    seed: int = 0,
    pool_size: int = 200,
    centers=((0.2, 0.2), (0.8, 0.8)),
    heights=(1.0, 0.9),
    width: float = 0.08,
    noise: float = 0.0,
) -> Problem:
    if pool_size < 2:
        raise ValueError("pool_size must be >= 2")
    rng = np.random.default_rng(seed)
    points = rng.uniform(size=(pool_size, len(centers[0])))
    centers = np.asarray(centers, dtype=float)
    heights = np.asarray(heights, dtype=float)
    values = np.array([bump_sum(p, centers, heights, width) for p in points])
    if noise > 0:
        values = values + noise * rng.standard_normal(pool_size)
    d2 = ((points[:, None, :] - centers[None]) ** 2).sum(-1)
    nearest = d2.argmin(axis=1)
    group = np.where(d2.min(axis=1) <= (2 * width) ** 2, nearest, -1)
    params = dict(pool_size=pool_size, centers=centers.tolist(), heights=heights.tolist(), width=width, noise=noise)
    return Problem("two-group-discrete-pool", "real-valued-pool", points, values, params=params, cluster_of=group,
                   peak_centers=centers, peak_radius=2 * width)


def gen_synthetic(name: str, params: Optional[dict] = None, seed: int = 0) -> Problem:
    params = dict(params or {})
    try:
        fn = {
            "two-cluster-binary": two_cluster_binary,
            "ring-of-clusters-binary": ring_of_clusters_binary,
            "multi-peak-continuous": multi_peak_continuous,
            "two-group-discrete-pool": two_group_discrete_pool,
        }[name]
    except KeyError:
        raise ValueError(f"unknown generator {name!r}; expected one of {GENERATORS}") from None
    return fn(seed=seed, **params)


def initial_design(problem: Problem, count: int, seed: int) -> list:
    """Uniform random initial data: pool row indices, or points in the box."""
    rng = np.random.default_rng(seed)
    if problem.mode == "continuous-function":
        d = problem.domain
        return [d.lower + d.width * u for u in rng.uniform(size=(count, d.dim))]
    if count > len(problem.points):
        raise ValueError("initial design larger than the pool")
    return sorted(int(i) for i in rng.choice(len(problem.points), size=count, replace=False))
