"""Kernels, kernel matrices and a symmetric eigensolver.

Every diversity score in the package reduces to the spectrum of a
unit-diagonal PSD similarity matrix.  Single matrices go through a cyclic
Jacobi solver; stacks of small matrices (the greedy and finite-difference
hot paths) go through LAPACK via :func:`eigvalsh_batch`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numba
import numpy as np

FAMILIES = ("gaussian-rbf", "cosine-similarity", "distance-derived")

NEG_EIG_TOL = 1e-8
MATRIX_TOL = 1e-10


class NonPSDError(ValueError):
    """Raised when a kernel matrix has an eigenvalue below ``-NEG_EIG_TOL``."""

    def __init__(self, value: float):
        super().__init__(f"kernel matrix is not PSD: eigenvalue {value:.3e} < {-NEG_EIG_TOL:g}")
        self.value = value


@dataclass(frozen=True)
class KernelSpec:
    family: str = "gaussian-rbf"
    lengthscale: Optional[float] = None
    max_distance: Optional[float] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "gaussian-rbf":
            if self.lengthscale is None:
                object.__setattr__(self, "lengthscale", 1.0)
            _check_positive("lengthscale", self.lengthscale)
            if self.max_distance is not None:
                raise ValueError("max_distance is only valid for the distance-derived family")
        elif self.family == "distance-derived":
            if self.max_distance is None:
                raise ValueError("distance-derived kernel needs max_distance")
            _check_positive("max_distance", self.max_distance)
            if self.lengthscale is not None:
                raise ValueError("lengthscale is only valid for the gaussian-rbf family")
        else:
            if self.lengthscale is not None or self.max_distance is not None:
                raise ValueError("cosine-similarity takes no parameters")

    @classmethod
    def gaussian(cls, lengthscale: float = 1.0) -> "KernelSpec":
        return cls("gaussian-rbf", lengthscale=lengthscale)

    def with_lengthscale(self, lengthscale: float) -> "KernelSpec":
        return KernelSpec("gaussian-rbf", lengthscale=lengthscale)


def _check_positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # descending, clamped at 0
    normalized: np.ndarray


def as_point(a) -> np.ndarray:
    p = np.asarray(a, dtype=float).reshape(-1)
    if p.size == 0:
        raise ValueError("a point needs at least one coordinate")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"non-finite coordinate in point {p.tolist()}")
    return p


def as_points(items) -> np.ndarray:
    x = np.asarray(items, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("need a nonempty list of points")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite coordinate in item list")
    return x


def kernel_eval(spec: KernelSpec, a, b) -> float:
    a, b = as_point(a), as_point(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.size} vs {b.size}")
    if spec.family == "gaussian-rbf":
        d2 = float(np.sum((a - b) ** 2))
        return math.exp(-d2 / (2.0 * spec.lengthscale**2))
    if spec.family == "distance-derived":
        d = float(np.sqrt(np.sum((a - b) ** 2)))
        return min(1.0, max(0.0, 1.0 - d / spec.max_distance))
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine similarity is undefined for the zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def sq_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, exact zeros on identical rows."""
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def cross_kernel(spec: KernelSpec, a, b) -> np.ndarray:
    """Rectangular kernel block k(a_i, b_j); same values as :func:`kernel_eval`."""
    a, b = as_points(a), as_points(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if spec.family == "gaussian-rbf":
        return np.exp(-sq_distances(a, b) / (2.0 * spec.lengthscale**2))
    if spec.family == "distance-derived":
        d = np.sqrt(sq_distances(a, b))
        return np.clip(1.0 - d / spec.max_distance, 0.0, 1.0)
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if np.any(na == 0) or np.any(nb == 0):
        raise ValueError("cosine similarity is undefined for the zero vector")
    return np.clip((a / na[:, None]) @ (b / nb[:, None]).T, -1.0, 1.0)


def build_kernel_matrix(spec: KernelSpec, items) -> np.ndarray:
    x = as_points(items)
    k = cross_kernel(spec, x, x)
    k = 0.5 * (k + k.T)
    np.fill_diagonal(k, 1.0)
    return k


def check_kernel_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"kernel matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("kernel matrix has non-finite entries")
    if m.size and np.max(np.abs(m - m.T)) > MATRIX_TOL:
        raise ValueError("kernel matrix is not symmetric")
    if m.size and np.max(np.abs(np.diag(m) - 1.0)) > MATRIX_TOL:
        raise ValueError("kernel matrix must have a unit diagonal")
    if m.size and np.max(np.abs(m)) > 1.0 + MATRIX_TOL:
        raise ValueError("kernel matrix entries must lie in [-1, 1]")
    return m


@numba.njit(cache=True)
def _jacobi(a, want_vectors, tol, max_sweeps):
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += a[i, j] * a[i, j]
        if math.sqrt(2.0 * off) < tol * n:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                sign = 1.0 if theta >= 0.0 else -1.0
                t = sign / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                if want_vectors:
                    for k in range(n):
                        vkp = v[k, p]
                        vkq = v[k, q]
                        v[k, p] = c * vkp - s * vkq
                        v[k, q] = s * vkp + c * vkq
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i]
    return w, v


def jacobi_eigh(m, want_vectors: bool = True, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi eigendecomposition of a real symmetric matrix.

    Stops once the off-diagonal Frobenius norm drops below ``tol * n``.
    Returns ``(w, V)`` sorted by descending eigenvalue, with ``m ~= V diag(w) V^T``.
    """
    a = np.ascontiguousarray(m, dtype=float)
    w, v = _jacobi(a, want_vectors, tol, max_sweeps)
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def _clamp(w: np.ndarray) -> np.ndarray:
    low = w.min(initial=0.0)
    if low < -NEG_EIG_TOL:
        raise NonPSDError(float(low))
    return np.where(w < 0.0, 0.0, w)


def eigen_symmetric(m, solver: str = "jacobi") -> Spectrum:
    m = check_kernel_matrix(m)
    if m.shape[0] == 0:
        return Spectrum(np.zeros(0), np.zeros(0))
    if solver == "jacobi":
        w, _ = jacobi_eigh(m, want_vectors=False)
    elif solver == "lapack":
        w = np.linalg.eigvalsh(m)[::-1]
    else:
        raise ValueError(f"unknown solver {solver!r}")
    w = _clamp(w)
    return Spectrum(w, w / w.sum())


def eigvalsh_batch(stack: np.ndarray) -> np.ndarray:
    """Clamped eigenvalues for a ``(B, m, m)`` stack of kernel matrices (LAPACK)."""
    if stack.shape[-1] == 0:
        return np.zeros(stack.shape[:-1])
    return _clamp(np.linalg.eigvalsh(stack))


def principal_stack(k: np.ndarray, base: Sequence[int], candidates: Sequence[int]) -> np.ndarray:
    """Stack of principal submatrices of ``k`` over ``base + [c]`` for each candidate ``c``."""
    base = np.asarray(base, dtype=int)
    cands = np.asarray(candidates, dtype=int)
    idx = np.empty((cands.size, base.size + 1), dtype=int)
    idx[:, : base.size] = base
    idx[:, base.size] = cands
    return k[idx[:, :, None], idx[:, None, :]]


def stacked_kernels(spec: KernelSpec, stack: np.ndarray) -> np.ndarray:
    """Kernel matrices for a ``(B, n, d)`` stack of point sets, one per slice."""
    diff = stack[:, :, None, :] - stack[:, None, :, :]
    if spec.family == "cosine-similarity":
        norms = np.linalg.norm(stack, axis=-1)
        if np.any(norms == 0):
            raise ValueError("cosine similarity is undefined for the zero vector")
        unit = stack / norms[..., None]
        k = np.clip(unit @ np.swapaxes(unit, 1, 2), -1.0, 1.0)
    else:
        d2 = np.einsum("bijk,bijk->bij", diff, diff)
        if spec.family == "gaussian-rbf":
            k = np.exp(-d2 / (2.0 * spec.lengthscale**2))
        else:
            k = np.clip(1.0 - np.sqrt(d2) / spec.max_distance, 0.0, 1.0)
    n = stack.shape[1]
    k[:, np.arange(n), np.arange(n)] = 1.0
    return k
