"""Probabilistic models behind the campaigns.

* :func:`classify_prob` -- smoothed k-nearest-neighbour estimate of Pr(y=1 | x, D)
* :class:`GaussianProcess` -- zero-mean GP on centered labels, lengthscale
  picked by grid search on the log marginal likelihood
* :func:`thompson_sample`, :func:`ucb_score` -- acquisition primitives
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .spectral import KernelSpec, as_points, cross_kernel, sq_distances


class FactorizationError(np.linalg.LinAlgError):
    pass


@dataclass
class LabeledData:
    points: np.ndarray
    labels: np.ndarray
    binary: bool = False

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=float).reshape(-1)
        if len(self.points) == 0:
            self.points = np.zeros((0, 1))
        else:
            self.points = as_points(self.points)
        if self.points.shape[0] != self.labels.size:
            raise ValueError(f"{self.points.shape[0]} points but {self.labels.size} labels")
        if self.binary and not np.all((self.labels == 0) | (self.labels == 1)):
            raise ValueError("binary labels must be 0 or 1")
        if not np.all(np.isfinite(self.labels)):
            raise ValueError("labels must be finite")

    def __len__(self):
        return self.labels.size


@dataclass(frozen=True)
class ClassifierConfig:
    k_neighbors: int = 15
    smoothing: float = 1.0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if not self.smoothing > 0:
            raise ValueError("smoothing must be positive")


def classify_probs(data: LabeledData, cfg: ClassifierConfig, queries) -> np.ndarray:
    """Vectorized :func:`classify_prob` over a set of query points."""
    if len(data) == 0:
        raise ValueError("classifier needs nonempty training data")
    queries = as_points(queries)
    d2 = sq_distances(queries, data.points)
    k = min(cfg.k_neighbors, len(data))
    # stable sort: equidistant neighbours resolve to the lowest training index
    nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
    positives = data.labels[nearest].sum(axis=1)
    return (positives + cfg.smoothing) / (k + 2.0 * cfg.smoothing)


def classify_prob(data: LabeledData, cfg: ClassifierConfig, query) -> float:
    return float(classify_probs(data, cfg, np.atleast_2d(np.asarray(query, dtype=float)))[0])


@dataclass(frozen=True)
class GPConfig:
    lengthscale: float = 1.0
    signal_variance: float = 1.0
    noise_variance: float = 1e-4
    jitter: float = 1e-8
    # None: data-relative default grid; empty tuple: keep ``lengthscale`` fixed
    lengthscale_grid: Optional[Sequence[float]] = None
    fit_signal_variance: bool = True

    def __post_init__(self):
        for name in ("lengthscale", "signal_variance", "noise_variance", "jitter"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.lengthscale_grid is not None and any(not v > 0 for v in self.lengthscale_grid):
            raise ValueError("lengthscale grid values must be positive")


@dataclass
class PosteriorBatch:
    means: np.ndarray
    covariance: np.ndarray
    sample: Optional[np.ndarray] = None

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.covariance)


def _robust_cholesky(a: np.ndarray, jitter: float, max_jitter: float = 1e-4) -> tuple[np.ndarray, float]:
    n = a.shape[0]
    eps = jitter
    while True:
        try:
            return cholesky(a + eps * np.eye(n), lower=True, check_finite=False), eps
        except np.linalg.LinAlgError:
            pass
        if eps >= max_jitter:
            raise FactorizationError(f"Cholesky failed even with jitter {eps:g}")
        eps = min(max(eps, 1e-12) * 10.0, max_jitter)


def default_lengthscale_grid(points: np.ndarray, count: int = 8) -> np.ndarray:
    d2 = sq_distances(points, points)
    iu = np.triu_indices(points.shape[0], k=1)
    dist = np.sqrt(d2[iu])
    dist = dist[dist > 0]
    median = float(np.median(dist)) if dist.size else 1.0
    return median * np.logspace(-2, 2, count)


@dataclass
class GaussianProcess:
    """Fitted GP state; immutable after :func:`gp_fit`."""

    cfg: GPConfig
    spec: KernelSpec
    signal_variance: float
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 1)))
    y_mean: float = 0.0
    chol: Optional[np.ndarray] = None
    alpha: Optional[np.ndarray] = None
    log_marginal_likelihood: float = math.nan

    @property
    def lengthscale(self) -> Optional[float]:
        return self.spec.lengthscale

    def kernel(self, a, b) -> np.ndarray:
        return self.signal_variance * cross_kernel(self.spec, a, b)

    def posterior(self, queries, full_cov: bool = True) -> PosteriorBatch:
        return gp_posterior(self, queries, full_cov)


def _log_marginal(points, y, spec, signal_variance, cfg):
    k = signal_variance * cross_kernel(spec, points, points)
    k += cfg.noise_variance * np.eye(points.shape[0])
    chol, _ = _robust_cholesky(k, cfg.jitter)
    alpha = cho_solve((chol, True), y, check_finite=False)
    n = y.size
    lml = -0.5 * float(y @ alpha) - float(np.log(np.diag(chol)).sum()) - 0.5 * n * math.log(2 * math.pi)
    return lml, chol, alpha


def gp_fit(data: LabeledData, cfg: GPConfig = GPConfig(), kernel: Optional[KernelSpec] = None) -> GaussianProcess:
    """Fit on centered labels.

    With ``kernel=None`` the covariance is gaussian-rbf and its lengthscale
    is chosen from the grid by log marginal likelihood; a given ``kernel``
    is used as-is.
    """
    if data.binary:
        raise ValueError("GP regression needs real-valued labels")
    if len(data) < 2:
        raise ValueError("GP fitting needs at least 2 points")
    y_mean = float(data.labels.mean())
    y = data.labels - y_mean
    if cfg.fit_signal_variance:
        signal_variance = max(float(np.var(y)), 1e-12)
    else:
        signal_variance = cfg.signal_variance
    if kernel is not None:
        specs = [kernel]
    elif cfg.lengthscale_grid is None:
        specs = [KernelSpec.gaussian(float(v)) for v in default_lengthscale_grid(data.points)]
    elif len(cfg.lengthscale_grid) == 0:
        specs = [KernelSpec.gaussian(cfg.lengthscale)]
    else:
        specs = [KernelSpec.gaussian(float(v)) for v in cfg.lengthscale_grid]
    best = None
    for spec in specs:
        try:
            lml, chol, alpha = _log_marginal(data.points, y, spec, signal_variance, cfg)
        except FactorizationError:
            continue
        if best is None or lml > best[0]:
            best = (lml, spec, chol, alpha)
    if best is None:
        raise FactorizationError("no lengthscale in the grid gave a factorizable covariance")
    lml, spec, chol, alpha = best
    return GaussianProcess(cfg, spec, signal_variance, data.points.copy(), y_mean, chol, alpha, lml)


def gp_prior(cfg: GPConfig = GPConfig(), kernel: Optional[KernelSpec] = None) -> GaussianProcess:
    return GaussianProcess(cfg, kernel or KernelSpec.gaussian(cfg.lengthscale), cfg.signal_variance)


def gp_posterior(gp: GaussianProcess, queries, full_cov: bool = True) -> PosteriorBatch:
    """Exact conditional mean and covariance (diagonal only when ``full_cov`` is False)."""
    queries = as_points(queries)
    n = queries.shape[0]
    if gp.chol is None:
        mean = np.full(n, gp.y_mean)
        if full_cov:
            cov = gp.kernel(queries, queries)
        else:
            var = np.full(n, gp.signal_variance)  # every kernel family has a unit diagonal
    else:
        k_tq = gp.kernel(gp.points, queries)
        mean = gp.y_mean + k_tq.T @ gp.alpha
        v = solve_triangular(gp.chol, k_tq, lower=True, check_finite=False)
        if full_cov:
            cov = gp.kernel(queries, queries) - v.T @ v
        else:
            var = gp.signal_variance - np.einsum("ij,ij->j", v, v)
    if full_cov:
        cov = 0.5 * (cov + cov.T) + gp.cfg.jitter * np.eye(n)
    else:
        cov = np.diag(var + gp.cfg.jitter)
    return PosteriorBatch(mean, cov)


def thompson_sample(post: PosteriorBatch, seed) -> np.ndarray:
    """One joint draw ``mean + L z`` from the posterior."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = post.means.size
    z = rng.standard_normal(n)
    if not np.any(post.covariance):
        return post.means.copy()
    chol, _ = _robust_cholesky(post.covariance, 0.0)
    return post.means + chol @ z


def ucb_score(post: PosteriorBatch, beta: float = 2.0) -> np.ndarray:
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    var = post.variances.copy()
    if var.size and var.min() < -1e-8:
        raise FloatingPointError(f"negative posterior variance {var.min():.3e}")
    return post.means + beta * np.sqrt(np.clip(var, 0.0, None))
