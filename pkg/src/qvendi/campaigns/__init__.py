"""Sequential experimental-design loops driven by the quality-weighted Vendi score."""

from .active_search import onestep_as_choice, onestep_gains, run_active_search, run_qvs_as
from .bayesopt import TrustRegion, report_solutions, run_discrete_bo, run_trust_region_bo
from .core import (
    AS_POLICIES,
    DISCRETE_BO_POLICIES,
    POLICIES,
    Q_POLICIES,
    TR_POLICIES,
    CampaignConfig,
    CampaignError,
    CampaignLog,
    FunctionOracle,
    PoolOracle,
    Query,
    minmax_normalize,
)


def run_qvs_bayesopt_tr(oracle, cfg, gp_cfg=None, spec=None, **kw):
    if cfg.policy != "qvs-bayesopt-tr":
        raise ValueError("run_qvs_bayesopt_tr expects policy 'qvs-bayesopt-tr'")
    return run_trust_region_bo(oracle, cfg, *_opt(gp_cfg, spec), **kw)


def run_qvs_bayesopt_discrete(points, oracle, cfg, gp_cfg=None, spec=None, **kw):
    if cfg.policy != "qvs-bayesopt-discrete":
        raise ValueError("run_qvs_bayesopt_discrete expects policy 'qvs-bayesopt-discrete'")
    return run_discrete_bo(points, oracle, cfg, *_opt(gp_cfg, spec), **kw)


def _opt(gp_cfg, spec):
    from ..spectral import KernelSpec
    from ..surrogates import GPConfig

    return gp_cfg or GPConfig(), spec or KernelSpec.gaussian()


def run_baseline(policy, oracle, cfg, *, points=None, surrogate_cfg=None, spec=None, **kw):
    """Run one of the comparison policies against the matching oracle type.

    ``random`` dispatches on the oracle: pool oracles sample rows without
    replacement, function oracles sample the box uniformly.
    """
    from dataclasses import replace

    cfg = replace(cfg, policy=policy)
    if policy not in ("random", "diversity-blind-as", "turbo", "ucb", "robot"):
        raise ValueError(f"{policy!r} is not a baseline policy")
    if isinstance(oracle, FunctionOracle):
        return run_trust_region_bo(oracle, cfg, *_opt(surrogate_cfg, spec), **kw)
    if oracle.binary:
        from ..surrogates import ClassifierConfig

        return run_active_search(points, oracle, cfg, surrogate_cfg or ClassifierConfig(), *_opt(None, spec)[1:], **kw)
    return run_discrete_bo(points, oracle, cfg, *_opt(surrogate_cfg, spec), **kw)


__all__ = [
    "AS_POLICIES",
    "DISCRETE_BO_POLICIES",
    "POLICIES",
    "Q_POLICIES",
    "TR_POLICIES",
    "CampaignConfig",
    "CampaignError",
    "CampaignLog",
    "FunctionOracle",
    "PoolOracle",
    "Query",
    "TrustRegion",
    "minmax_normalize",
    "onestep_as_choice",
    "onestep_gains",
    "report_solutions",
    "run_active_search",
    "run_baseline",
    "run_discrete_bo",
    "run_qvs_as",
    "run_qvs_bayesopt_discrete",
    "run_qvs_bayesopt_tr",
    "run_trust_region_bo",
]
