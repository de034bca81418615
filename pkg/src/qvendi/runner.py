"""Seeded multi-repeat campaign execution and CSV persistence."""

from __future__ import annotations

import csv
import io
import math
import multiprocessing
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .campaigns.active_search import run_active_search
from .campaigns.bayesopt import run_discrete_bo, run_trust_region_bo
from .campaigns.core import AS_POLICIES, DISCRETE_BO_POLICIES, Q_POLICIES, TR_POLICIES, CampaignLog, Query
from .config import ConfigError, RunConfig
from .datasets import DatasetError, read_dataset
from .evaluation import MetricsReport, aggregate, run_metrics
from .spectral import build_kernel_matrix
from .synthetic import Problem, gen_synthetic, initial_design
from .vendi import Order, format_order, vendi_score

MODE_POLICIES = {
    "binary-pool": AS_POLICIES,
    "real-valued-pool": DISCRETE_BO_POLICIES,
    "continuous-function": TR_POLICIES,
}
INITIAL_STREAM, CAMPAIGN_STREAM, PROBLEM_STREAM = 0, 1, 2


def stream_seed(seed: int, stream: int) -> int:
    """Independent integer seed for one randomness stream of a repeat."""
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])


def load_problem(cfg: RunConfig, repeat: int = 0) -> Problem:
    """The problem instance a repeat runs on.

    Generators use ``problem.seed`` (default: the base seed) unless
    ``per_repeat`` asks for a fresh instance seeded from the repeat.
    """
    p = cfg.problem
    if p.generator is not None:
        if p.per_repeat:
            seed = stream_seed(cfg.repeat_seed(repeat), PROBLEM_STREAM)
        else:
            seed = cfg.execution.base_seed if p.seed is None else p.seed
        try:
            return gen_synthetic(p.generator, p.params, seed)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[problem] {exc}") from None
    try:
        data = read_dataset(p.dataset)
    except DatasetError as exc:
        raise ConfigError(str(exc)) from None
    if data.mode == "unlabeled":
        raise ConfigError(f"[problem] {p.dataset} needs a 'label' or 'value' column to run campaigns")
    truth = data.labels if data.labels is not None else data.values
    return Problem(Path(p.dataset).stem, data.mode, data.points, truth)


def validate(cfg: RunConfig, problem: Problem) -> None:
    allowed = MODE_POLICIES[problem.mode]
    for name in cfg.policy.names:
        if name not in allowed:
            raise ConfigError(f"[policy] {name!r} does not apply to a {problem.mode} problem; use one of {list(allowed)}")
    if problem.points is not None:
        n = len(problem.points)
        if cfg.problem.initial + cfg.policy.budget > n:
            raise ConfigError(
                f"[policy] budget {cfg.policy.budget} plus {cfg.problem.initial} initial rows exceeds the {n}-row pool"
            )
    if cfg.problem.threshold is not None and problem.mode == "binary-pool":
        raise ConfigError("[problem] threshold only applies to real-valued problems")


@dataclass(frozen=True)
class Task:
    policy: str
    q: Optional[Order]
    repeat: int


def plan(cfg: RunConfig) -> list[Task]:
    """q-dependent policies run once per order; the rest once per repeat."""
    tasks = []
    for name in cfg.policy.names:
        qs = cfg.policy.qs if name in Q_POLICIES else (None,)
        for q in qs:
            for r in range(cfg.execution.repeats):
                tasks.append(Task(name, q, r))
    return tasks


def initial_set(cfg: RunConfig, problem: Problem, repeat: int) -> list:
    if cfg.problem.initial == 0:
        return []
    return initial_design(problem, cfg.problem.initial, stream_seed(cfg.repeat_seed(repeat), INITIAL_STREAM))


def run_task(cfg: RunConfig, problem: Problem, task: Task) -> CampaignLog:
    if cfg.problem.per_repeat:
        problem = load_problem(cfg, task.repeat)
    seed = stream_seed(cfg.repeat_seed(task.repeat), CAMPAIGN_STREAM)
    ccfg = cfg.policy.campaign(task.policy, 1.0 if task.q is None else task.q, seed)
    initial = initial_set(cfg, problem, task.repeat)
    if problem.mode == "continuous-function":
        log = run_trust_region_bo(problem.oracle, ccfg, cfg.gp, cfg.kernel, initial=initial, repeat=task.repeat)
    else:
        kernel = None
        if task.policy in Q_POLICIES:
            kernel = build_kernel_matrix(cfg.kernel, problem.points)
        if problem.mode == "binary-pool":
            log = run_active_search(problem.points, problem.oracle, ccfg, cfg.classifier, cfg.kernel,
                                    initial=initial, pool_kernel=kernel, repeat=task.repeat)
        else:
            log = run_discrete_bo(problem.points, problem.oracle, ccfg, cfg.gp, cfg.kernel,
                                  initial=initial, pool_kernel=kernel, repeat=task.repeat)
    if task.q is None:
        log.q = None
    log.state.pop("regions", None)  # keeps results small when crossing process boundaries
    return log


def _run_task_safe(args):
    cfg, problem, task = args
    try:
        return task, run_task(cfg, problem, task), None
    except Exception as exc:  # reported by the collector, never swallowed
        return task, None, f"{type(exc).__name__}: {exc}\n{traceback.format_exc()}"


@dataclass
class RunResult:
    logs: dict = field(default_factory=dict)  # Task -> CampaignLog
    errors: dict = field(default_factory=dict)  # Task -> message
    report: Optional[MetricsReport] = None

    @property
    def ok(self) -> bool:
        return not self.errors


def execute(cfg: RunConfig, problem: Problem, jobs: Optional[int] = None) -> RunResult:
    tasks = plan(cfg)
    jobs = cfg.execution.jobs if jobs is None else jobs
    work = [(cfg, problem, t) for t in tasks]
    if jobs > 1 and len(tasks) > 1:
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
            outcomes = list(pool.map(_run_task_safe, work))
    else:
        outcomes = [_run_task_safe(w) for w in work]
    result = RunResult()
    for task, log, err in outcomes:
        if err is None:
            result.logs[task] = log
        else:
            result.errors[task] = err
    if result.ok:
        result.report = summarize(cfg, problem, result.logs)
    return result


def summarize(cfg: RunConfig, problem: Problem, logs: dict) -> MetricsReport:
    runs: dict = {}
    for task, log in logs.items():
        metrics = run_metrics(
            log, cfg.kernel, cfg.eval_qs, cfg.report_q,
            threshold=cfg.problem.threshold, peak_centers=problem.peak_centers,
        )
        runs.setdefault((task.policy, task.q), []).append(metrics)
    return aggregate(runs, cfg.policy.qs, cfg.eval_qs)


# ---- CSV output ----------------------------------------------------------

def _num(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _order(q) -> str:
    return "" if q is None else format_order(q)


def _csv(rows, header) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return out.getvalue()


def log_label(task: Task) -> str:
    return task.policy if task.q is None else f"{task.policy}_q{format_order(task.q)}"


def format_log(log: CampaignLog) -> str:
    rows = []
    q = _order(log.q)
    for qr in log.queries:
        item = str(qr.item) if qr.item is not None else ";".join(_num(v) for v in qr.point)
        rows.append([qr.iteration, log.repeat, log.policy, q, item, _num(qr.observation)])
    return _csv(rows, ["iter", "repeat", "policy", "q", "item", "observation"])


def parse_log(text: str, problem: Problem) -> CampaignLog:
    """Rebuild a campaign log from its CSV; pool items are resolved against the problem."""
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty log")
    first = rows[0]
    q = float(first["q"]) if first["q"] else None
    log = CampaignLog(first["policy"], q, problem.mode, repeat=int(first["repeat"]))
    for row in rows:
        if problem.mode == "continuous-function":
            item, point = None, np.array([float(v) for v in row["item"].split(";")])
        else:
            item = int(row["item"])
            point = problem.points[item].copy()
        log.append(Query(int(row["iter"]), item, point, float(row["observation"])))
    return log


def format_metrics(report: MetricsReport) -> str:
    rows = [
        [policy, _order(qp), _order(qe), metric, _num(cell.mean), _num(cell.stderr), int(cell.best)]
        for policy, qp, qe, metric, cell in report.rows()
    ]
    return _csv(rows, ["policy", "q_policy", "q_eval", "metric", "mean", "stderr", "best_flag"])


def cross_q_metric(problem: Problem, cfg: RunConfig) -> Optional[str]:
    if problem.mode == "binary-pool":
        return "vs"
    return "threshold_vs" if cfg.problem.threshold is not None else None


def format_cross_q(report: MetricsReport, metric: str) -> str:
    """Matrix of mean ``metric`` with one row per (policy, q_policy) and one column per eval order."""
    header = ["policy", "q_policy"] + [format_order(q) for q in report.eval_qs]
    rows = []
    for (policy, qp), cells in report.cells.items():
        if (metric, report.eval_qs[0]) not in cells:
            continue
        rows.append([policy, _order(qp)] + [_num(cells[(metric, qe)].mean) for qe in report.eval_qs])
    return _csv(rows, header)


def format_solutions(logs: dict) -> str:
    rows = []
    for task, log in logs.items():
        if log.solutions is None:
            continue
        for rank, point in enumerate(np.atleast_2d(log.solutions)):
            rows.append([task.policy, _order(task.q), task.repeat, rank, ";".join(_num(v) for v in point)])
    return _csv(rows, ["policy", "q_policy", "repeat", "rank", "point"])


def trajectory(log: CampaignLog, cfg: RunConfig) -> list[tuple[int, float, float, Optional[float]]]:
    """Per policy query: (step, observation, incumbent, VS at the report order).

    Binary campaigns track the positive count as the incumbent and the VS of
    positives; real-valued ones track the best value and, with a threshold,
    the VS of points reaching it.  Initial data counts toward both.
    """
    binary = log.mode == "binary-pool"
    threshold = cfg.problem.threshold
    hits = [qr.point for qr in log.initial if (qr.observation == 1.0 if binary else threshold is not None and qr.observation >= threshold)]
    obs0 = [qr.observation for qr in log.initial]
    incumbent = float(sum(obs0)) if binary else (max(obs0) if obs0 else -math.inf)
    track_vs = binary or threshold is not None

    def vs_now():
        return vendi_score(build_kernel_matrix(cfg.kernel, np.array(hits)), cfg.report_q) if hits else 0.0

    vs = vs_now() if track_vs else None
    out = []
    for step, qr in enumerate(log.policy_queries, start=1):
        hit = qr.observation == 1.0 if binary else threshold is not None and qr.observation >= threshold
        incumbent = incumbent + qr.observation if binary else max(incumbent, qr.observation)
        if hit:
            hits.append(qr.point)
            vs = vs_now()
        out.append((step, qr.observation, incumbent, vs))
    return out


def format_trajectories(logs: dict, cfg: RunConfig) -> str:
    rows = []
    for task, log in logs.items():
        for step, obs, inc, vs in trajectory(log, cfg):
            rows.append([task.policy, _order(task.q), task.repeat, step, _num(obs), _num(inc), _num(vs)])
    return _csv(rows, ["policy", "q_policy", "repeat", "step", "observation", "incumbent", "vs"])


def write_outputs(result: RunResult, cfg: RunConfig, problem: Problem, out_dir: Path, trajectories: bool = False) -> list[Path]:
    """Write every output file from the collector; returns the paths written."""
    out_dir = Path(out_dir)
    (out_dir / "logs").mkdir(parents=True, exist_ok=True)
    written = []

    def put(path: Path, text: str):
        path.write_text(text, encoding="utf-8")
        written.append(path)

    for task, log in result.logs.items():
        put(out_dir / "logs" / f"{log_label(task)}_r{task.repeat}.csv", format_log(log))
    if problem.mode == "continuous-function":
        put(out_dir / "solutions.csv", format_solutions(result.logs))
    if result.report is not None:
        put(out_dir / "metrics.csv", format_metrics(result.report))
        metric = cross_q_metric(problem, cfg)
        if metric and (len(cfg.policy.qs) > 1 or trajectories):
            put(out_dir / "cross_q.csv", format_cross_q(result.report, metric))
        if trajectories:
            put(out_dir / "trajectories.csv", format_trajectories(result.logs, cfg))
    return written
