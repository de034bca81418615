"""Pool-based active search: batch qVS-AS, the one-step rule, and baselines."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..selection import candidate_values, greedy_select_kernel
from ..spectral import KernelSpec, as_points, build_kernel_matrix, eigvalsh_batch
from ..surrogates import ClassifierConfig, LabeledData, classify_probs
from ..vendi import Order, vs_from_eigenvalues
from .core import AS_POLICIES, CampaignConfig, CampaignError, CampaignLog, PoolOracle, Query, top_indices


def _probabilities(points, observed: dict, candidates, ccfg: ClassifierConfig) -> np.ndarray:
    if not observed:
        return np.full(len(candidates), 0.5)
    idx = list(observed)
    data = LabeledData(points[idx], [observed[i] for i in idx], binary=True)
    return classify_probs(data, ccfg, points[candidates])


def _vs_of(kernel: np.ndarray, idx: Sequence[int], q: Order) -> float:
    if len(idx) == 0:
        return 0.0
    sub = kernel[np.ix_(idx, idx)][None]
    return float(vs_from_eigenvalues(eigvalsh_batch(sub), q)[0])


def onestep_gains(kernel, positives: Sequence[int], candidates: Sequence[int], probs, q: Order) -> np.ndarray:
    """Expected VS_q gain p(x) * [VS(D+ + x) - VS(D+)] for each candidate."""
    positives = list(positives)
    ones = np.ones(kernel.shape[0])
    with_x = candidate_values(kernel, ones, q, positives, candidates)
    return np.asarray(probs, dtype=float) * (with_x - _vs_of(kernel, positives, q))


def onestep_as_choice(
    points,
    observed: dict,
    q: Order,
    classifier_cfg: ClassifierConfig,
    spec: KernelSpec,
    probs=None,
    pool_kernel=None,
) -> tuple[int, float]:
    """One-step Bayes-optimal pick among unlabeled rows; returns ``(index, expected gain)``.

    ``observed`` maps pool index to its 0/1 label.  ``probs`` (aligned with
    the unlabeled indices in ascending order) overrides the classifier.
    """
    points = as_points(points)
    kernel = build_kernel_matrix(spec, points) if pool_kernel is None else pool_kernel
    candidates = [i for i in range(points.shape[0]) if i not in observed]
    if not candidates:
        raise CampaignError("no unlabeled candidates left")
    if probs is None:
        probs = _probabilities(points, observed, candidates, classifier_cfg)
    positives = sorted(i for i, y in observed.items() if y == 1)
    gains = onestep_gains(kernel, positives, candidates, probs, q)
    best = int(np.argmax(gains))
    return candidates[best], float(gains[best])


def run_active_search(
    points,
    oracle: PoolOracle,
    cfg: CampaignConfig,
    classifier_cfg: ClassifierConfig = ClassifierConfig(),
    spec: KernelSpec = KernelSpec.gaussian(),
    initial: Sequence[int] = (),
    pool_kernel: Optional[np.ndarray] = None,
    repeat: int = 0,
) -> CampaignLog:
    if cfg.policy not in AS_POLICIES:
        raise ValueError(f"{cfg.policy!r} is not an active search policy")
    if not oracle.binary:
        raise ValueError("active search needs a binary-pool oracle")
    points = as_points(points)
    n = points.shape[0]
    initial = [int(i) for i in initial]
    if len(set(initial)) != len(initial):
        raise ValueError("initial indices must be distinct")
    if cfg.budget + len(initial) > n:
        raise ValueError(f"budget {cfg.budget} plus {len(initial)} initial rows exceeds pool size {n}")
    if cfg.policy == "onestep-as" and cfg.batch_size != 1:
        raise ValueError("the one-step policy is sequential: batch_size must be 1")
    kernel = pool_kernel
    if kernel is None and cfg.policy in ("qvs-as", "onestep-as"):
        kernel = build_kernel_matrix(spec, points)
    rng = np.random.default_rng(cfg.seed)
    log = CampaignLog(cfg.policy, cfg.q, oracle.mode, repeat=repeat)
    observed: dict[int, int] = {}

    def record(i, it, info):
        y = int(oracle(i))
        observed[i] = y
        log.append(Query(it, i, points[i].copy(), float(y), info))

    for i in initial:
        record(i, 0, {})

    spent, it = 0, 0
    while spent < cfg.budget:
        it += 1
        b = min(cfg.batch_size, cfg.budget - spent)
        candidates = [i for i in range(n) if i not in observed]
        if cfg.policy == "random":
            picks = [int(i) for i in rng.choice(candidates, size=b, replace=False)]
            probs = None
        else:
            probs = _probabilities(points, observed, candidates, classifier_cfg)
            if cfg.policy == "diversity-blind-as":
                picks = [candidates[j] for j in top_indices(probs, b)]
            elif cfg.policy == "onestep-as":
                positives = sorted(i for i, y in observed.items() if y == 1)
                gains = onestep_gains(kernel, positives, candidates, probs, cfg.q)
                picks = [candidates[int(np.argmax(gains))]]
            else:
                scores = np.zeros(n)
                scores[candidates] = probs
                positives = sorted(i for i, y in observed.items() if y == 1)
                scores[positives] = 1.0  # known positives: Pr(y=1) = 1
                picks = greedy_select_kernel(kernel, scores, cfg.q, b, fixed=positives, candidates=candidates)
        prob_of = dict(zip(candidates, probs)) if probs is not None else {}
        for i in picks:
            record(i, it, {"p": float(prob_of[i])} if prob_of else {})
        spent += len(picks)
    return log


def run_qvs_as(points, oracle, cfg: CampaignConfig, classifier_cfg=ClassifierConfig(), spec=KernelSpec.gaussian(), **kw):
    if cfg.policy != "qvs-as":
        raise ValueError("run_qvs_as expects policy 'qvs-as'")
    return run_active_search(points, oracle, cfg, classifier_cfg, spec, **kw)
