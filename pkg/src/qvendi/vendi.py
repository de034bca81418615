"""Vendi scores of order q and their quality-weighted variant."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .spectral import (
    KernelSpec,
    as_points,
    build_kernel_matrix,
    check_kernel_matrix,
    eigen_symmetric,
)

# Normalized eigenvalues at or below this are treated as exact zeros for every order,
# so that VS_0 (the rank count) bounds all other orders from above.
RANK_TOL = 1e-10
SHANNON_TOL = 1e-9

Order = float


def parse_order(token: Union[str, float, int]) -> Order:
    """Parse an order from a number or the literal ``inf``."""
    if isinstance(token, str):
        t = token.strip().lower()
        if t in ("inf", "infinity", "+inf"):
            return math.inf
        try:
            q = float(t)
        except ValueError:
            raise ValueError(f"bad order {token!r}: expected a nonnegative number or 'inf'") from None
    else:
        q = float(token)
    if math.isnan(q) or q < 0:
        raise ValueError(f"order must be >= 0, got {token!r}")
    return q


def format_order(q: Order) -> str:
    if math.isinf(q):
        return "inf"
    return repr(float(q)) if q != int(q) else str(int(q))


def vs_from_normalized(lam: np.ndarray, q: Order) -> np.ndarray:
    """Order-q Vendi score from normalized eigenvalues along the last axis.

    Works on a single spectrum or a stack of them.  Rows of all zeros
    (empty sets) score 0.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.shape[-1] == 0:
        return np.zeros(lam.shape[:-1])
    kept = np.where(lam > RANK_TOL, lam, 0.0)
    empty = ~np.any(kept > 0, axis=-1)
    if q == 0:
        out = np.count_nonzero(kept, axis=-1).astype(float)
    elif math.isinf(q):
        with np.errstate(divide="ignore"):
            out = 1.0 / kept.max(axis=-1)
    elif abs(q - 1.0) < SHANNON_TOL:
        safe = np.where(kept > 0, kept, 1.0)
        out = np.exp(-np.sum(kept * np.log(safe), axis=-1))
    else:
        safe = np.where(kept > 0, kept, 1.0)
        powered = np.where(kept > 0, safe**q, 0.0)
        with np.errstate(divide="ignore"):
            out = np.exp(np.log(powered.sum(axis=-1)) / (1.0 - q))
    return np.where(empty, 0.0, out)


def vs_from_eigenvalues(w: np.ndarray, q: Order) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    total = w.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        lam = np.where(total > 0, w / np.where(total > 0, total, 1.0), 0.0)
    return vs_from_normalized(lam, q)


def vendi_score(m, q: Order = 1.0, solver: str = "jacobi") -> float:
    """VS_q of a kernel matrix; 0 for the empty matrix."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0.0
    spectrum = eigen_symmetric(m, solver=solver)
    return float(vs_from_normalized(spectrum.normalized, q))


@dataclass
class ScoredSet:
    items: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float).reshape(-1)
        if len(self.items) == 0 and self.scores.size == 0:
            self.items = np.zeros((0, 1))
            return
        self.items = as_points(self.items)
        if self.items.shape[0] != self.scores.size:
            raise ValueError(f"{self.items.shape[0]} items but {self.scores.size} scores")
        check_scores(self.scores)

    def __len__(self):
        return self.scores.size


def check_scores(scores: np.ndarray) -> None:
    if not np.all(np.isfinite(scores)):
        raise ValueError("quality scores must be finite")
    if scores.size and (scores.min() < 0.0 or scores.max() > 1.0):
        raise ValueError("quality scores must lie in [0, 1]")


def qvs_from_kernel(m, scores, q: Order = 1.0, solver: str = "jacobi") -> float:
    scores = np.asarray(scores, dtype=float).reshape(-1)
    if scores.size == 0:
        return 0.0
    check_scores(scores)
    return float(scores.mean()) * vendi_score(m, q, solver=solver)


def quality_weighted_vendi_score(scored: ScoredSet, spec: KernelSpec, q: Order = 1.0) -> float:
    """Mean quality times VS_q.  The empty set scores 0."""
    if len(scored) == 0:
        return 0.0
    k = build_kernel_matrix(spec, scored.items)
    return qvs_from_kernel(k, scored.scores, q)


def vendi_score_of_subset(pool_kernel, indices: Iterable[int], q: Order = 1.0) -> float:
    """VS_q of the principal submatrix of a precomputed pool kernel."""
    k = np.asarray(pool_kernel, dtype=float)
    idx = np.asarray(list(indices), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= k.shape[0]):
        raise IndexError(f"subset index out of range for a {k.shape[0]}-item pool")
    if np.unique(idx).size != idx.size:
        raise ValueError("subset indices must be distinct")
    if idx.size == 0:
        return 0.0
    return vendi_score(check_kernel_matrix(k[np.ix_(idx, idx)]), q)
