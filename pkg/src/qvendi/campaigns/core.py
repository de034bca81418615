"""Shared campaign plumbing: configuration, oracles and the append-only log."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..selection import BoxDomain
from ..vendi import Order, format_order

AS_POLICIES = ("qvs-as", "onestep-as", "random", "diversity-blind-as")
TR_POLICIES = ("qvs-bayesopt-tr", "turbo", "robot", "random")
DISCRETE_BO_POLICIES = ("qvs-bayesopt-discrete", "ucb", "random")
POLICIES = tuple(dict.fromkeys(AS_POLICIES + TR_POLICIES + DISCRETE_BO_POLICIES))
# policies whose behaviour depends on the order q
Q_POLICIES = ("qvs-as", "onestep-as", "qvs-bayesopt-tr", "qvs-bayesopt-discrete")

MODES = ("binary-pool", "continuous-function", "real-valued-pool")


class CampaignError(RuntimeError):
    pass


@dataclass(frozen=True)
class CampaignConfig:
    policy: str
    budget: int
    batch_size: int = 1
    q: Order = 1.0
    seed: int = 0
    n_regions: int = 1
    tau: Optional[float] = None
    beta: float = 2.0
    length_init: float = 0.8
    length_min: float = 2.0**-7
    length_max: float = 1.6
    success_tolerance: int = 3
    failure_tolerance: int = 5
    candidates_per_dim: int = 50
    max_candidates: int = 1000

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}; expected one of {POLICIES}")
        if self.budget < 1 or self.batch_size < 1:
            raise ValueError("budget and batch_size must be positive")
        if self.batch_size > self.budget:
            raise ValueError("batch_size cannot exceed budget")
        if self.q < 0:
            raise ValueError("order q must be >= 0")
        if self.n_regions < 1:
            raise ValueError("need at least one trust region")
        if self.policy == "robot" and (self.tau is None or self.tau < 0):
            raise ValueError("robot needs a nonnegative distance threshold tau")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if not 0 < self.length_min <= self.length_init <= self.length_max:
            raise ValueError("trust region lengths must satisfy 0 < L_min <= L_init <= L_max")

    def candidates_per_region(self, dim: int) -> int:
        return min(self.candidates_per_dim * dim, self.max_candidates)


@dataclass(frozen=True)
class PoolOracle:
    """Ground truth for a finite pool: binary labels or real values per row."""

    points: np.ndarray
    truth: np.ndarray
    binary: bool = True

    def __post_init__(self):
        truth = np.asarray(self.truth, dtype=float).reshape(-1)
        if truth.size != len(self.points):
            raise ValueError("one truth value per pool row required")
        if self.binary and not np.all((truth == 0) | (truth == 1)):
            raise ValueError("binary pool labels must be 0/1")
        object.__setattr__(self, "truth", truth)

    @property
    def mode(self) -> str:
        return "binary-pool" if self.binary else "real-valued-pool"

    def __call__(self, index: int) -> float:
        return float(self.truth[index])


@dataclass(frozen=True)
class FunctionOracle:
    fn: Callable[[np.ndarray], float]
    domain: BoxDomain
    mode = "continuous-function"

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        value = float(self.fn(x))
        if not math.isfinite(value):
            raise CampaignError(f"oracle returned non-finite value {value} at {x.tolist()}")
        return value


@dataclass
class Query:
    iteration: int
    item: Optional[int]
    point: np.ndarray
    observation: float
    info: dict = field(default_factory=dict)


@dataclass
class CampaignLog:
    """Append-only record of one campaign; iteration 0 holds the initial data."""

    policy: str
    q: Order
    mode: str
    queries: list[Query] = field(default_factory=list)
    solutions: Optional[np.ndarray] = None
    repeat: int = 0
    state: dict = field(default_factory=dict)

    def append(self, query: Query) -> None:
        if self.mode != "continuous-function" and query.item in self.items_seen():
            raise CampaignError(f"item {query.item} queried twice")
        self.queries.append(query)
        self._seen = None

    def items_seen(self) -> set:
        cached = getattr(self, "_seen", None)
        if cached is None:
            cached = {qr.item for qr in self.queries}
            self._seen = cached
        return cached

    @property
    def initial(self) -> list[Query]:
        return [qr for qr in self.queries if qr.iteration == 0]

    @property
    def policy_queries(self) -> list[Query]:
        return [qr for qr in self.queries if qr.iteration > 0]

    def points(self) -> np.ndarray:
        if not self.queries:
            return np.zeros((0, 1))
        return np.vstack([qr.point for qr in self.queries])

    def observations(self) -> np.ndarray:
        return np.array([qr.observation for qr in self.queries], dtype=float)

    def positives(self) -> np.ndarray:
        mask = self.observations() == 1.0
        pts = self.points()
        return pts[mask] if len(pts) else pts

    @property
    def label(self) -> str:
        return self.policy if self.policy not in Q_POLICIES else f"{self.policy}[q={format_order(self.q)}]"


def minmax_normalize(values: np.ndarray) -> np.ndarray:
    """Affine map onto [0, 1]; a constant vector maps to 0.5."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return values
    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= 0.0:
        return np.full(values.shape, 0.5)
    return np.clip((values - lo) / (hi - lo), 0.0, 1.0)


def top_indices(values: np.ndarray, k: int) -> np.ndarray:
    """Positions of the k largest values, ties to the lowest position."""
    return np.argsort(-np.asarray(values, dtype=float), kind="stable")[:k]
