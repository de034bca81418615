"""Post-hoc campaign metrics and multi-repeat aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .campaigns.core import CampaignLog
from .spectral import KernelSpec, build_kernel_matrix, eigen_symmetric, sq_distances
from .vendi import Order, format_order, vendi_score

LOGDET_FLOOR = 1e-12


def _vs_of_points(points: np.ndarray, spec: KernelSpec, q: Order) -> float:
    if len(points) == 0:
        return 0.0
    return vendi_score(build_kernel_matrix(spec, points), q)


def eval_vs_of_positives(log: CampaignLog, spec: KernelSpec, q: Order = 1.0) -> float:
    """VS_q of every positive in the log (initial data included); 0 without positives.

    At the report order this is the effective discovery count.
    """
    return _vs_of_points(log.positives(), spec, q)


def eval_max_pairwise_distance(log: CampaignLog) -> float:
    pos = log.positives()
    if len(pos) < 2:
        return 0.0
    return float(np.sqrt(sq_distances(pos, pos).max()))


def kernel_logdet(k: np.ndarray) -> float:
    """Log-determinant from the spectrum; ``-inf`` when any eigenvalue <= 1e-12."""
    w = eigen_symmetric(k).eigenvalues
    if w.size == 0 or w.min() <= LOGDET_FLOOR:
        return -math.inf
    return float(np.sum(np.log(w)))


def eval_kernel_logdet(log: CampaignLog, spec: KernelSpec) -> float:
    pos = log.positives()
    if len(pos) == 0:
        return -math.inf
    return kernel_logdet(build_kernel_matrix(spec, pos))


def eval_threshold_discoveries(log: CampaignLog, threshold: float, spec: KernelSpec, q: Order = 1.0) -> float:
    """VS_q over queried points whose observed value reaches ``threshold``."""
    obs = log.observations()
    if obs.size == 0:
        return 0.0
    return _vs_of_points(log.points()[obs >= threshold], spec, q)


def best_value(log: CampaignLog) -> float:
    obs = log.observations()
    return float(obs.max()) if obs.size else -math.inf


def incumbent_trace(log: CampaignLog) -> np.ndarray:
    return np.maximum.accumulate(log.observations())


def peaks_covered(solutions: np.ndarray, centers: np.ndarray, radius: Optional[float] = None) -> int:
    """Number of distinct peaks hit when each solution is assigned to its nearest center.

    With ``radius`` set, solutions farther than that from every center are
    left unassigned.
    """
    if solutions is None or len(solutions) == 0:
        return 0
    d = np.sqrt(sq_distances(np.asarray(solutions, float), np.asarray(centers, float)))
    nearest = d.argmin(axis=1)
    if radius is not None:
        nearest = nearest[d.min(axis=1) <= radius]
    return int(np.unique(nearest).size)


def run_metrics(
    log: CampaignLog,
    spec: KernelSpec,
    eval_qs: Sequence[Order],
    report_q: Order = 1.0,
    threshold: Optional[float] = None,
    peak_centers: Optional[np.ndarray] = None,
    peak_radius: Optional[float] = None,
) -> dict[tuple[str, Optional[Order]], float]:
    """Every metric that applies to the log's mode, keyed by ``(metric, q_eval)``."""
    out: dict[tuple[str, Optional[Order]], float] = {}
    if log.mode == "binary-pool":
        for q in eval_qs:
            out[("vs", q)] = eval_vs_of_positives(log, spec, q)
        out[("effective_discoveries", report_q)] = eval_vs_of_positives(log, spec, report_q)
        out[("positives", None)] = float(np.sum(log.observations() == 1.0))
        out[("max_pairwise_distance", None)] = eval_max_pairwise_distance(log)
        logdet = eval_kernel_logdet(log, spec)
        out[("kernel_logdet", None)] = logdet
        out[("kernel_det", None)] = math.exp(logdet) if logdet > -math.inf else 0.0
    else:
        out[("best_value", None)] = best_value(log)
        if threshold is not None:
            for q in eval_qs:
                out[("threshold_vs", q)] = eval_threshold_discoveries(log, threshold, spec, q)
        if peak_centers is not None:
            out[("peaks_covered", None)] = float(peaks_covered(log.solutions, peak_centers, peak_radius))
    return out


@dataclass
class Cell:
    mean: float
    stderr: float
    n: int
    best: bool = False


@dataclass
class MetricsReport:
    """Aggregated metrics: ``cells[(policy, q_policy)][(metric, q_eval)]``."""

    cells: dict = field(default_factory=dict)
    policy_qs: list = field(default_factory=list)
    eval_qs: list = field(default_factory=list)

    def rows(self):
        for (policy, qp), metrics in self.cells.items():
            for (metric, qe), cell in metrics.items():
                yield policy, qp, qe, metric, cell

    def cross_q(self, policy: str, metric: str = "vs") -> dict:
        """``{(q_policy, q_eval): Cell}`` for one policy."""
        return {
            (qp, qe): cell
            for (pol, qp), metrics in self.cells.items()
            if pol == policy
            for (m, qe), cell in metrics.items()
            if m == metric
        }


def mean_stderr(values: Sequence[float]) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("no values to aggregate")
    if v.size == 1:
        return float(v[0]), 0.0
    if np.all(np.isneginf(v)):
        return -math.inf, 0.0
    if not np.all(np.isfinite(v)):
        return float(np.mean(v)), math.nan
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def column_best(values: Sequence[float]) -> list[bool]:
    """Flag every entry equal to the column maximum (ties flagged jointly)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return []
    top = np.max(v)
    return [bool(x == top) for x in v]


def aggregate(
    runs: Mapping[tuple[str, Optional[Order]], Iterable[Mapping]],
    policy_qs: Sequence[Order] = (),
    eval_qs: Sequence[Order] = (),
) -> MetricsReport:
    """Mean and standard error per (policy, q_policy) cell and metric, with column-best flags.

    ``runs`` maps ``(policy, q_policy)`` to the per-repeat dicts from
    :func:`run_metrics`.
    """
    if not runs:
        raise ValueError("nothing to aggregate")
    report = MetricsReport(policy_qs=list(policy_qs), eval_qs=list(eval_qs))
    for key, per_run in runs.items():
        per_run = list(per_run)
        if not per_run:
            raise ValueError(f"no runs for {key}")
        metric_keys = list(per_run[0])
        cells = {}
        for mk in metric_keys:
            values = [r[mk] for r in per_run]
            m, se = mean_stderr(values)
            cells[mk] = Cell(m, se, len(values))
        report.cells[key] = cells
    columns: dict = {}
    for key, cells in report.cells.items():
        for mk, cell in cells.items():
            columns.setdefault(mk, []).append(cell)
    for cells in columns.values():
        for cell, flag in zip(cells, column_best([c.mean for c in cells])):
            cell.best = flag
    return report


def diagonal_ranks(report: MetricsReport, policy: str, metric: str = "vs") -> dict:
    """Rank (1 = best) of the matching-q row within each eval-q column of a policy's cross-q grid."""
    grid = report.cross_q(policy, metric)
    ranks = {}
    for qe in report.eval_qs:
        column = {qp: cell.mean for (qp, q2), cell in grid.items() if q2 == qe}
        if qe not in column:
            continue
        ranks[format_order(qe)] = 1 + sum(1 for v in column.values() if v > column[qe])
    return ranks
