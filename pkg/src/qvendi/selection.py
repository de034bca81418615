"""Maximizing the quality-weighted Vendi score over subsets.

Two maximizers: sequential greedy over a discrete pool, and multi-start
projected gradient ascent (finite-difference gradients) over a box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .spectral import KernelSpec, build_kernel_matrix, eigvalsh_batch, principal_stack, stacked_kernels
from .vendi import Order, ScoredSet, check_scores, qvs_from_kernel, vs_from_eigenvalues


@dataclass(frozen=True)
class GreedyConfig:
    batch_size: int
    tie_break: str = "lowest-index"

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.tie_break != "lowest-index":
            raise ValueError("only lowest-index tie breaking is supported")


@dataclass(frozen=True)
class BoxDomain:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape or lo.size == 0:
            raise ValueError("box bounds must be nonempty vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(lo < hi)):
            raise ValueError("box bounds must be finite with lower < upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def to_unit(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / self.width

    def from_unit(self, u: np.ndarray) -> np.ndarray:
        return np.clip(self.lower + np.asarray(u, dtype=float) * self.width, self.lower, self.upper)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.width))


@dataclass(frozen=True)
class ContinuousOptConfig:
    restarts: int = 10
    max_iters: int = 500
    step_tolerance: float = 1e-7
    fd_step: float = 1e-5
    seed: int = 0
    armijo: float = 1e-4

    def __post_init__(self):
        for name in ("restarts", "max_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("step_tolerance", "fd_step", "armijo"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def candidate_values(
    kernel: np.ndarray,
    scores: np.ndarray,
    q: Order,
    base: Sequence[int],
    candidates: Sequence[int],
) -> np.ndarray:
    """qVS(base + {c}) for every candidate c, evaluated as one eigenvalue batch."""
    base = list(base)
    cands = np.asarray(candidates, dtype=int)
    if cands.size == 0:
        return np.zeros(0)
    w = eigvalsh_batch(principal_stack(kernel, base, cands))
    vs = vs_from_eigenvalues(w, q)
    quality = (scores[base].sum() + scores[cands]) / (len(base) + 1)
    return quality * vs


def greedy_select_kernel(
    kernel: np.ndarray,
    scores,
    q: Order,
    batch_size: int,
    fixed: Sequence[int] = (),
    candidates: Optional[Sequence[int]] = None,
) -> list[int]:
    """Greedy qVS batch over a precomputed kernel.

    ``fixed`` items are part of every evaluated set but never selected.
    Candidates default to every index not in ``fixed``.  Ties go to the
    lowest index.
    """
    kernel = np.asarray(kernel, dtype=float)
    scores = np.asarray(scores, dtype=float).reshape(-1)
    check_scores(scores)
    fixed = [int(i) for i in fixed]
    fixed_set = set(fixed)
    if candidates is None:
        remaining = [i for i in range(kernel.shape[0]) if i not in fixed_set]
    else:
        remaining = sorted(int(i) for i in candidates)
        if fixed_set.intersection(remaining):
            raise ValueError("fixed indices overlap the candidate set")
    if batch_size > len(remaining):
        raise ValueError(f"batch_size {batch_size} exceeds the {len(remaining)} available candidates")
    chosen: list[int] = []
    for _ in range(batch_size):
        values = candidate_values(kernel, scores, q, fixed + chosen, remaining)
        best = int(np.argmax(values))  # first maximum = lowest index, remaining is sorted
        chosen.append(remaining.pop(best))
    return chosen


def greedy_select(
    pool: ScoredSet,
    spec: KernelSpec,
    q: Order,
    cfg: GreedyConfig,
    fixed: Sequence[int] = (),
) -> list[int]:
    kernel = build_kernel_matrix(spec, pool.items)
    return greedy_select_kernel(kernel, pool.scores, q, cfg.batch_size, fixed)


def greedy_gain(pool: ScoredSet, spec: KernelSpec, q: Order, current: Sequence[int], candidate: int) -> float:
    current = [int(i) for i in current]
    n = len(pool)
    if not 0 <= candidate < n or any(not 0 <= i < n for i in current):
        raise IndexError("index out of range")
    if candidate in current:
        raise ValueError("candidate is already in the current set")
    kernel = build_kernel_matrix(spec, pool.items)
    before = qvs_from_kernel(kernel[np.ix_(current, current)], pool.scores[current], q)
    idx = current + [candidate]
    after = qvs_from_kernel(kernel[np.ix_(idx, idx)], pool.scores[idx], q)
    return after - before


def batch_qvs(spec: KernelSpec, points: np.ndarray, scores: np.ndarray, q: Order) -> float:
    k = stacked_kernels(spec, points[None])[0]
    return qvs_from_kernel(k, np.clip(scores, 0.0, 1.0), q, solver="lapack")


class _BatchObjective:
    """qVS of a flattened (batch x dim) configuration plus its central-difference gradient."""

    def __init__(self, spec, score_fn, shape, q, fd_step):
        self.spec = spec
        self.score_fn = score_fn
        self.shape = shape
        self.q = q
        self.h = fd_step

    def _score(self, point):
        s = float(self.score_fn(point))
        if not math.isfinite(s):
            raise ValueError(f"score function returned a non-finite value at {point.tolist()}")
        return s

    def scores(self, x: np.ndarray) -> np.ndarray:
        return np.array([self._score(p) for p in x.reshape(self.shape)])

    def value(self, x: np.ndarray) -> float:
        pts = x.reshape(self.shape)
        return batch_qvs(self.spec, pts, self.scores(x), self.q)

    def value_and_grad(self, x: np.ndarray):
        b, d = self.shape
        pts = x.reshape(self.shape)
        base_scores = self.scores(x)
        value = batch_qvs(self.spec, pts, base_scores, self.q)
        nvar = b * d
        stack = np.repeat(pts[None], 2 * nvar, axis=0)
        quality = np.empty(2 * nvar)
        total = base_scores.sum()
        for v in range(nvar):
            i, j = divmod(v, d)
            for sign, slot in ((1.0, 2 * v), (-1.0, 2 * v + 1)):
                stack[slot, i, j] += sign * self.h
                s_new = self._score(stack[slot, i])
                quality[slot] = np.clip((total - base_scores[i] + s_new) / b, 0.0, 1.0)
        vs = vs_from_eigenvalues(eigvalsh_batch(stacked_kernels(self.spec, stack)), self.q)
        f = quality * vs
        grad = (f[0::2] - f[1::2]) / (2.0 * self.h)
        return value, grad


def _ascend(obj: _BatchObjective, x0: np.ndarray, lower, upper, cfg: ContinuousOptConfig):
    x = np.clip(x0, lower, upper)
    fx, g = obj.value_and_grad(x)
    step = 1.0
    for _ in range(cfg.max_iters):
        moved = False
        t = step
        while t > 1e-12:
            x_new = np.clip(x + t * g, lower, upper)
            dx = x_new - x
            if not np.any(dx):
                break
            f_new = obj.value(x_new)
            if f_new >= fx + cfg.armijo * float(g @ dx):
                moved = True
                # a doubled step can overshoot a peak and still pass; prefer shorter if better
                while t > 1e-12:
                    x_half = np.clip(x + 0.5 * t * g, lower, upper)
                    f_half = obj.value(x_half)
                    if f_half <= f_new:
                        break
                    x_new, f_new, t = x_half, f_half, 0.5 * t
                dx = x_new - x
                break
            t *= 0.5
        if not moved:
            break
        x, fx = x_new, f_new
        step = min(2.0 * t, 1e3)
        if np.max(np.abs(dx)) < cfg.step_tolerance:
            break
        fx, g = obj.value_and_grad(x)
    return x, fx


def continuous_maximize(
    spec: KernelSpec,
    score_fn: Callable[[np.ndarray], float],
    domain: BoxDomain,
    batch_size: int,
    q: Order,
    cfg: ContinuousOptConfig = ContinuousOptConfig(),
) -> np.ndarray:
    """Multi-start projected gradient ascent of qVS over ``batch_size`` points in a box.

    Returns a ``(batch_size, dim)`` array: the best batch over all restarts
    (ties to the earliest restart).
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    d = domain.dim
    probe = score_fn(domain.lower.copy())
    if not math.isfinite(float(probe)):
        raise ValueError("score function returned a non-finite value")
    obj = _BatchObjective(spec, score_fn, (batch_size, d), q, cfg.fd_step)
    lower = np.tile(domain.lower, batch_size)
    upper = np.tile(domain.upper, batch_size)
    rng = np.random.default_rng(cfg.seed)
    starts = rng.uniform(lower, upper, size=(cfg.restarts, batch_size * d))
    best_x, best_f = None, -math.inf
    for x0 in starts:
        x, f = _ascend(obj, x0, lower, upper, cfg)
        if f > best_f:
            best_x, best_f = x, f
    return best_x.reshape(batch_size, d)
