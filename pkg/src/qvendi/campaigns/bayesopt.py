"""Batch Bayesian optimization: trust-region loop over a box and UCB loop over a pool."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..selection import BoxDomain, greedy_select_kernel
from ..spectral import KernelSpec, as_points, build_kernel_matrix, sq_distances
from ..surrogates import GPConfig, LabeledData, gp_fit, gp_posterior, gp_prior, thompson_sample, ucb_score
from ..vendi import Order
from .core import (
    DISCRETE_BO_POLICIES,
    TR_POLICIES,
    CampaignConfig,
    CampaignError,
    CampaignLog,
    FunctionOracle,
    PoolOracle,
    Query,
    minmax_normalize,
    top_indices,
)


@dataclass
class TrustRegion:
    """Local box in unit-normalized coordinates around the region's incumbent."""

    center: np.ndarray
    length: float
    best: float = -math.inf
    best_point: Optional[np.ndarray] = None
    successes: int = 0
    failures: int = 0
    restarts: int = 0

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        half = self.length / 2.0
        return np.clip(self.center - half, 0.0, 1.0), np.clip(self.center + half, 0.0, 1.0)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        lo, hi = self.bounds()
        return lo + (hi - lo) * rng.uniform(size=(count, self.center.size))

    def update(self, new_values: np.ndarray, new_points: np.ndarray, cfg: CampaignConfig, rng) -> None:
        """Success/failure bookkeeping after this region received queries."""
        j = int(np.argmax(new_values))
        if new_values[j] > self.best:
            self.best = float(new_values[j])
            self.best_point = new_points[j].copy()
            self.center = new_points[j].copy()
            self.successes += 1
            self.failures = 0
        else:
            self.failures += 1
            self.successes = 0
        if self.successes >= cfg.success_tolerance:
            self.length = min(2.0 * self.length, cfg.length_max)
            self.successes = 0
        elif self.failures >= cfg.failure_tolerance:
            self.length /= 2.0
            self.failures = 0
        if self.length < cfg.length_min:
            self.center = rng.uniform(size=self.center.size)
            self.length = cfg.length_init
            self.best = -math.inf
            self.best_point = None
            self.successes = self.failures = 0
            self.restarts += 1


def _init_regions(x_unit: np.ndarray, y: np.ndarray, cfg: CampaignConfig, rng) -> list[TrustRegion]:
    """Regions start on the best initial points (distinct), then at random centers."""
    regions = []
    for j in top_indices(y, len(y)):
        if len(regions) == cfg.n_regions:
            break
        if any(np.array_equal(r.center, x_unit[j]) for r in regions):
            continue
        regions.append(TrustRegion(x_unit[j].copy(), cfg.length_init, float(y[j]), x_unit[j].copy()))
    while len(regions) < cfg.n_regions:
        regions.append(TrustRegion(rng.uniform(size=x_unit.shape[1]), cfg.length_init))
    return regions


def _rank_regions(regions: list[TrustRegion]) -> list[int]:
    return sorted(range(len(regions)), key=lambda m: (-regions[m].best, m))


def _fit(points: np.ndarray, values: np.ndarray, gp_cfg: GPConfig, kernel=None):
    if len(values) < 2:
        return gp_prior(gp_cfg, kernel)
    return gp_fit(LabeledData(points, values), gp_cfg, kernel)


def report_solutions(points: np.ndarray, values: np.ndarray, count: int, spec: KernelSpec, q: Optional[Order]) -> np.ndarray:
    """The ``count`` solutions a campaign hands back.

    ``q=None`` returns the best observed points; otherwise the greedy qVS_q
    subset of observed points with min-max normalized values as quality.
    """
    points = as_points(points)
    count = min(count, points.shape[0])
    if q is None:
        return points[top_indices(values, count)]
    kernel = build_kernel_matrix(spec, points)
    chosen = greedy_select_kernel(kernel, minmax_normalize(values), q, count)
    return points[chosen]


def run_trust_region_bo(
    oracle: FunctionOracle,
    cfg: CampaignConfig,
    gp_cfg: GPConfig = GPConfig(),
    spec: KernelSpec = KernelSpec.gaussian(),
    initial: Sequence = (),
    repeat: int = 0,
) -> CampaignLog:
    """Continuous BayesOpt with M trust regions.

    ``qvs-bayesopt-tr`` picks each batch greedily by qVS over the merged
    candidates with Thompson values as quality; ``turbo`` takes the top
    Thompson values; ``robot`` is ``turbo`` with region candidates rejected
    unless at least ``tau`` away from every higher-ranked incumbent.
    """
    if cfg.policy not in TR_POLICIES:
        raise ValueError(f"{cfg.policy!r} is not a trust-region BayesOpt policy")
    domain: BoxDomain = oracle.domain
    dim = domain.dim
    rng = np.random.default_rng(cfg.seed)
    log = CampaignLog(cfg.policy, cfg.q, "continuous-function", repeat=repeat)
    x_unit: list[np.ndarray] = []
    values: list[float] = []

    def record(u, it, info):
        x = domain.from_unit(u)
        y = oracle(x)
        x_unit.append(np.asarray(u, dtype=float).copy())
        values.append(y)
        log.append(Query(it, None, x, y, info))

    for x in initial:
        record(domain.to_unit(np.asarray(x, dtype=float)), 0, {})

    regions: list[TrustRegion] = []
    if cfg.policy != "random":
        if x_unit:
            regions = _init_regions(np.array(x_unit), np.array(values), cfg, rng)
        else:
            regions = [TrustRegion(rng.uniform(size=dim), cfg.length_init) for _ in range(cfg.n_regions)]

    per_region = cfg.candidates_per_region(dim)
    spent, it = 0, 0
    while spent < cfg.budget:
        it += 1
        b = min(cfg.batch_size, cfg.budget - spent)
        if cfg.policy == "random":
            for u in rng.uniform(size=(b, dim)):
                record(u, it, {})
            spent += b
            continue

        gp = _fit(np.array(x_unit).reshape(-1, dim), np.array(values), gp_cfg)
        blocks, owners = [], []
        rank = _rank_regions(regions)
        for m, region in enumerate(regions):
            cand = region.sample(rng, per_region)
            if cfg.policy == "robot":
                above = [regions[r].best_point for r in rank[: rank.index(m)] if regions[r].best_point is not None]
                if above:
                    d = np.sqrt(sq_distances(domain.from_unit(cand), domain.from_unit(np.array(above))))
                    cand = cand[np.all(d >= cfg.tau, axis=1)]
            blocks.append(cand)
            owners.append(np.full(len(cand), m))
        merged = np.vstack(blocks)
        owner = np.concatenate(owners)
        if merged.shape[0] < b:
            raise CampaignError(f"only {merged.shape[0]} feasible candidates for a batch of {b}")
        sample = thompson_sample(gp_posterior(gp, merged), rng)
        if cfg.policy == "qvs-bayesopt-tr":
            kernel = build_kernel_matrix(spec, domain.from_unit(merged))
            picks = greedy_select_kernel(kernel, minmax_normalize(sample), cfg.q, b)
        else:
            picks = [int(j) for j in top_indices(sample, b)]
        lengths = [r.length for r in regions]
        for j in picks:
            record(merged[j], it, {"region": int(owner[j]), "length": lengths[owner[j]]})
        spent += len(picks)

        new_u = np.array(x_unit[-len(picks):])
        new_y = np.array(values[-len(picks):])
        picked_owner = owner[picks]
        for m, region in enumerate(regions):
            mine = picked_owner == m
            if np.any(mine):
                region.update(new_y[mine], new_u[mine], cfg, rng)

    pts, ys = log.points(), log.observations()
    if cfg.policy == "qvs-bayesopt-tr":
        log.solutions = report_solutions(pts, ys, cfg.n_regions, spec, cfg.q)
    elif cfg.policy == "robot":
        ranked = [regions[m].best_point for m in _rank_regions(regions) if regions[m].best_point is not None]
        log.solutions = domain.from_unit(np.array(ranked)) if ranked else pts[:0]
    else:
        log.solutions = report_solutions(pts, ys, cfg.n_regions, spec, None)
    log.state["regions"] = regions
    return log


def run_discrete_bo(
    points,
    oracle: PoolOracle,
    cfg: CampaignConfig,
    gp_cfg: GPConfig = GPConfig(),
    spec: KernelSpec = KernelSpec.gaussian(),
    initial: Sequence[int] = (),
    pool_kernel: Optional[np.ndarray] = None,
    repeat: int = 0,
) -> CampaignLog:
    """BayesOpt over a finite pool; the pool kernel doubles as the GP kernel.

    ``qvs-bayesopt-discrete`` scores a candidate by qVS over all observed
    rows, the batch so far, and the candidate, with normalized UCB as
    quality; ``ucb`` takes the top UCB values.
    """
    if cfg.policy not in DISCRETE_BO_POLICIES:
        raise ValueError(f"{cfg.policy!r} is not a discrete BayesOpt policy")
    if oracle.binary:
        raise ValueError("discrete BayesOpt needs a real-valued-pool oracle")
    points = as_points(points)
    n = points.shape[0]
    initial = [int(i) for i in initial]
    if cfg.budget + len(initial) > n:
        raise CampaignError(f"budget {cfg.budget} plus {len(initial)} initial rows exhausts the {n}-row pool")
    kernel = pool_kernel
    if kernel is None and cfg.policy == "qvs-bayesopt-discrete":
        kernel = build_kernel_matrix(spec, points)
    rng = np.random.default_rng(cfg.seed)
    log = CampaignLog(cfg.policy, cfg.q, "real-valued-pool", repeat=repeat)
    observed: dict[int, float] = {}

    def record(i, it, info):
        y = oracle(i)
        observed[i] = y
        log.append(Query(it, i, points[i].copy(), y, info))

    for i in initial:
        record(i, 0, {})

    spent, it = 0, 0
    while spent < cfg.budget:
        it += 1
        b = min(cfg.batch_size, cfg.budget - spent)
        candidates = [i for i in range(n) if i not in observed]
        if cfg.policy == "random":
            picks = [int(i) for i in rng.choice(candidates, size=b, replace=False)]
        else:
            seen = list(observed)
            gp = _fit(points[seen], np.array([observed[i] for i in seen]), gp_cfg, spec)
            ucb = ucb_score(gp_posterior(gp, points, full_cov=False), cfg.beta)
            if cfg.policy == "ucb":
                picks = [candidates[j] for j in top_indices(ucb[candidates], b)]
            else:
                picks = greedy_select_kernel(
                    kernel, minmax_normalize(ucb), cfg.q, b, fixed=sorted(observed), candidates=candidates
                )
        for i in picks:
            record(i, it, {})
        spent += len(picks)
    log.solutions = report_solutions(log.points(), log.observations(), 1, spec, None)
    return log
