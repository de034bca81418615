"""Command-line entry point: score, select, run, bench and gen."""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from .campaigns.core import minmax_normalize
from .config import ConfigError, load_config
from .datasets import Dataset, DatasetError, format_dataset, read_dataset
from .runner import cross_q_metric, execute, load_problem, validate, write_outputs
from .selection import greedy_select_kernel
from .spectral import FAMILIES, KernelSpec, NonPSDError, build_kernel_matrix
from .synthetic import GENERATORS, gen_synthetic
from .vendi import format_order, parse_order, qvs_from_kernel, vendi_score

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class UsageError(ValueError):
    pass


def _kernel_from_args(args) -> KernelSpec:
    try:
        return KernelSpec(args.kernel, lengthscale=args.lengthscale, max_distance=args.max_distance)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _orders(text: str):
    try:
        return [parse_order(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _scores(data: Dataset) -> Optional[np.ndarray]:
    return None if data.values is None else minmax_normalize(data.values)


def cmd_score(args) -> int:
    data = read_dataset(args.dataset)
    spec = _kernel_from_args(args)
    qs = _orders(args.q)
    if not qs:
        raise UsageError("empty q list")
    k = build_kernel_matrix(spec, data.points)
    scores = _scores(data)
    rows = []
    for q in qs:
        vs = vendi_score(k, q)
        qvs = qvs_from_kernel(k, scores, q) if scores is not None else None
        rows.append((format_order(q), vs, qvs))
    header = ["q", "vs"] + (["qvs"] if scores is not None else [])
    print("  ".join(f"{h:>12}" for h in header))
    for q, vs, qvs in rows:
        cells = [f"{q:>12}", f"{vs:>12.6f}"] + ([f"{qvs:>12.6f}"] if qvs is not None else [])
        print("  ".join(cells))
    if args.csv:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        for q, vs, qvs in rows:
            w.writerow([q, repr(vs)] + ([repr(qvs)] if qvs is not None else []))
        Path(args.csv).write_text(out.getvalue(), encoding="utf-8")
    return EXIT_OK


def cmd_select(args) -> int:
    data = read_dataset(args.dataset)
    spec = _kernel_from_args(args)
    q = _orders(args.q)
    if len(q) != 1:
        raise UsageError("select takes a single order q")
    if not 1 <= args.batch_size <= len(data):
        raise UsageError(f"batch size {args.batch_size} must lie in [1, {len(data)}] for this file")
    k = build_kernel_matrix(spec, data.points)
    scores = _scores(data)
    if scores is None:
        scores = np.ones(len(data))
    chosen = greedy_select_kernel(k, scores, q[0], args.batch_size)
    achieved = qvs_from_kernel(k[np.ix_(chosen, chosen)], scores[chosen], q[0])
    print("selected: " + " ".join(str(i) for i in chosen))
    print(f"qvs[q={format_order(q[0])}]: {achieved!r}")
    return EXIT_OK


def _load(args):
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"execution.base_seed={args.seed}")
    if getattr(args, "output_dir", None) is not None:
        overrides.append(f"execution.output_dir={yaml.safe_dump(str(args.output_dir)).splitlines()[0]}")
    cfg = load_config(args.config, overrides)
    problem = load_problem(cfg)
    validate(cfg, problem)
    return cfg, problem


def _campaigns(args, trajectories: bool) -> int:
    cfg, problem = _load(args)
    jobs = args.jobs if getattr(args, "jobs", None) is not None else cfg.execution.jobs
    if jobs < 1:
        raise UsageError("--jobs must be >= 1")
    result = execute(cfg, problem, jobs)
    written = write_outputs(result, cfg, problem, cfg.execution.output_dir, trajectories=trajectories)
    for task, err in result.errors.items():
        print(f"error: {task.policy} q={task.q} repeat={task.repeat}: {err}", file=sys.stderr)
    if result.report is not None:
        _print_summary(result.report, cross_q_metric(problem, cfg) or "best_value")
    print(f"wrote {len(written)} files under {cfg.execution.output_dir}")
    return EXIT_OK if result.ok else EXIT_RUNTIME


def _print_summary(report, metric: str) -> None:
    for policy, qp, qe, name, cell in report.rows():
        if name != metric:
            continue
        tag = policy if qp is None else f"{policy}[q={format_order(qp)}]"
        col = "" if qe is None else f" @q={format_order(qe)}"
        flag = " *" if cell.best else ""
        print(f"{tag:<32} {name}{col:<10} {cell.mean:10.4f} +/- {cell.stderr:.4f}{flag}")


def cmd_run(args) -> int:
    return _campaigns(args, trajectories=False)


def cmd_bench(args) -> int:
    return _campaigns(args, trajectories=True)


def _params(pairs: Sequence[str]) -> dict:
    params = {}
    for pair in pairs or ():
        key, sep, text = pair.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"bad --param {pair!r}: expected key=value")
        params[key.strip()] = yaml.safe_load(text)
    return params


def cmd_gen(args) -> int:
    seed = 0 if args.seed is None else args.seed
    try:
        problem = gen_synthetic(args.name, _params(args.param), seed)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if problem.points is None:
        raise UsageError(f"{args.name} is a continuous objective with no dataset file; reference it from a run config")
    binary = problem.mode == "binary-pool"
    data = Dataset(problem.points, problem.truth if binary else None, None if binary else problem.truth)
    text = format_dataset(data)
    target = args.out
    if target is None and args.output_dir is not None:
        target = Path(args.output_dir) / f"{args.name}_s{seed}.csv"
    if target is None:
        sys.stdout.write(text)
    else:
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        Path(target).write_text(text, encoding="utf-8")
        print(f"wrote {len(data)} rows to {target}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="base seed (run/bench) or generator seed (gen)")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="parallel repeats for run/bench")
    common.add_argument("--output-dir", type=Path, default=argparse.SUPPRESS, help="where outputs are written")

    parser = argparse.ArgumentParser(prog="qvendi", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    def kernel_flags(p):
        p.add_argument("--kernel", choices=FAMILIES, default="gaussian-rbf")
        p.add_argument("--lengthscale", type=float, default=None, help="gaussian-rbf lengthscale (default 1)")
        p.add_argument("--max-distance", type=float, default=None, help="distance-derived normalizer")

    p = sub.add_parser("score", parents=[common], help="VS and qVS of a dataset file")
    p.add_argument("dataset")
    kernel_flags(p)
    p.add_argument("--q", default="1", help="comma-separated orders, 'inf' allowed")
    p.add_argument("--csv", default=None, help="also write the table as CSV")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("select", parents=[common], help="greedy qVS batch from a dataset file")
    p.add_argument("dataset")
    kernel_flags(p)
    p.add_argument("--batch-size", type=int, required=True)
    p.add_argument("--q", default="1")
    p.set_defaults(func=cmd_select)

    for name, func, text in (("run", cmd_run, "run campaigns from a config"),
                             ("bench", cmd_bench, "policy x q benchmark with trajectories")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("config")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config key")
        p.set_defaults(func=func)

    p = sub.add_parser("gen", parents=[common], help="write a synthetic dataset file")
    p.add_argument("name", choices=GENERATORS)
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="generator parameter")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("seed", "jobs", "output_dir"):
        if not hasattr(args, name):
            setattr(args, name, None)
    try:
        return args.func(args)
    except NonPSDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ConfigError, DatasetError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
