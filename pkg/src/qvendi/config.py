"""Declarative run configuration loaded from YAML, with dotted-key overrides."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import yaml

from .campaigns.core import POLICIES, CampaignConfig
from .spectral import KernelSpec
from .surrogates import ClassifierConfig, GPConfig
from .vendi import Order, parse_order


class ConfigError(ValueError):
    pass


_SECTIONS = {
    "problem": {"generator", "dataset", "params", "seed", "per_repeat", "initial", "threshold"},
    "kernel": {"family", "lengthscale", "max_distance"},
    "policy": {"name", "names", "q", "batch_size", "budget", "n_regions", "tau", "beta"},
    "surrogate": {
        "k_neighbors", "smoothing",
        "lengthscale", "signal_variance", "noise_variance", "jitter", "lengthscale_grid", "fit_signal_variance",
    },
    "execution": {"repeats", "base_seed", "output_dir", "jobs"},
    "evaluation": {"eval_q", "report_q"},
}


@dataclass
class ProblemConfig:
    generator: Optional[str] = None
    dataset: Optional[Path] = None
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None
    per_repeat: bool = False  # fresh generator instance for every repeat
    initial: int = 10
    threshold: Optional[float] = None


@dataclass
class PolicyConfig:
    names: tuple[str, ...] = ("random",)
    qs: tuple[Order, ...] = (1.0,)
    batch_size: int = 1
    budget: int = 10
    n_regions: int = 1
    tau: Optional[float] = None
    beta: float = 2.0

    def campaign(self, policy: str, q: Order, seed: int) -> CampaignConfig:
        return CampaignConfig(
            policy=policy, budget=self.budget, batch_size=self.batch_size, q=q, seed=seed,
            n_regions=self.n_regions, tau=self.tau, beta=self.beta,
        )


@dataclass
class ExecutionConfig:
    repeats: int = 1
    base_seed: int = 0
    output_dir: Path = Path("results")
    jobs: int = 1


@dataclass
class RunConfig:
    problem: ProblemConfig
    kernel: KernelSpec
    policy: PolicyConfig
    classifier: ClassifierConfig
    gp: GPConfig
    execution: ExecutionConfig
    eval_qs: tuple[Order, ...]
    report_q: Order = 1.0

    def repeat_seed(self, repeat: int) -> int:
        return self.execution.base_seed + repeat


def _as_list(value) -> list:
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return list(value)
    if isinstance(value, str) and "," in value:
        return [v.strip() for v in value.split(",") if v.strip()]
    return [value]


def _orders(value, what: str) -> tuple[Order, ...]:
    try:
        qs = tuple(parse_order(v) for v in _as_list(value))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: {exc}") from None
    if not qs:
        raise ConfigError(f"{what}: empty order list")
    return tuple(dict.fromkeys(qs))


def apply_override(raw: dict, assignment: str) -> None:
    """Apply one ``section.key=value`` override; the value is parsed as YAML."""
    target, sep, text = assignment.partition("=")
    section, dot, key = target.strip().partition(".")
    if not sep or not dot or not key:
        raise ConfigError(f"bad override {assignment!r}: expected section.key=value")
    if section not in _SECTIONS:
        raise ConfigError(f"bad override {assignment!r}: unknown section {section!r}")
    if key not in _SECTIONS[section] and not (section == "problem" and key.startswith("params.")):
        raise ConfigError(f"bad override {assignment!r}: unknown key {key!r} in [{section}]")
    try:
        value = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"bad override {assignment!r}: {exc}") from None
    block = raw.setdefault(section, {})
    if not isinstance(block, dict):
        raise ConfigError(f"section {section!r} must be a mapping")
    if key.startswith("params."):
        block.setdefault("params", {})[key[len("params."):]] = value
    else:
        block[key] = value


def _get(block: dict, key: str, kind, default=None, *, section: str, optional=False):
    if key not in block or block[key] is None:
        if optional or default is not None:
            return default
        raise ConfigError(f"[{section}] missing required key {key!r}")
    value = block[key]
    try:
        if kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        if kind is bool:
            if not isinstance(value, bool):
                raise ValueError
            return value
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"[{section}] {key}: cannot read {value!r} as {kind.__name__}") from None


def build_config(raw: dict, base_dir: Union[str, Path] = ".") -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping of sections")
    raw = copy.deepcopy(raw)
    for section, block in raw.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section {section!r}; expected one of {sorted(_SECTIONS)}")
        if block is None:
            raw[section] = {}
        elif not isinstance(block, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        unknown = set(raw[section]) - _SECTIONS[section]
        if unknown:
            raise ConfigError(f"[{section}] unknown keys {sorted(unknown)}")

    p = raw.get("problem", {})
    generator = p.get("generator")
    dataset = p.get("dataset")
    if (generator is None) == (dataset is None):
        raise ConfigError("[problem] set exactly one of 'generator' or 'dataset'")
    if dataset is not None:
        dataset = Path(base_dir) / str(dataset)
        if not dataset.is_file():
            raise ConfigError(f"[problem] dataset {dataset} does not exist")
    params = p.get("params") or {}
    if not isinstance(params, dict):
        raise ConfigError("[problem] params must be a mapping")
    problem = ProblemConfig(
        generator=None if generator is None else str(generator),
        dataset=dataset,
        params=dict(params),
        seed=_get(p, "seed", int, section="problem", optional=True),
        per_repeat=_get(p, "per_repeat", bool, False, section="problem"),
        initial=_get(p, "initial", int, 10, section="problem"),
        threshold=_get(p, "threshold", float, section="problem", optional=True),
    )
    if problem.per_repeat and (dataset is not None or problem.seed is not None):
        raise ConfigError("[problem] per_repeat needs a generator and no fixed seed")
    if problem.initial < 0:
        raise ConfigError("[problem] initial must be >= 0")

    k = raw.get("kernel", {})
    try:
        kernel = KernelSpec(
            family=str(k.get("family", "gaussian-rbf")),
            lengthscale=_get(k, "lengthscale", float, section="kernel", optional=True),
            max_distance=_get(k, "max_distance", float, section="kernel", optional=True),
        )
    except ValueError as exc:
        raise ConfigError(f"[kernel] {exc}") from None

    pol = raw.get("policy", {})
    if "name" in pol and "names" in pol:
        raise ConfigError("[policy] use either 'name' or 'names'")
    names = tuple(str(n) for n in _as_list(pol.get("names", pol.get("name"))))
    if not names:
        raise ConfigError("[policy] missing policy name")
    for n in names:
        if n not in POLICIES:
            raise ConfigError(f"[policy] unknown policy {n!r}; expected one of {list(POLICIES)}")
    policy = PolicyConfig(
        names=tuple(dict.fromkeys(names)),
        qs=_orders(pol.get("q", 1.0), "[policy] q"),
        batch_size=_get(pol, "batch_size", int, 1, section="policy"),
        budget=_get(pol, "budget", int, section="policy"),
        n_regions=_get(pol, "n_regions", int, 1, section="policy"),
        tau=_get(pol, "tau", float, section="policy", optional=True),
        beta=_get(pol, "beta", float, 2.0, section="policy"),
    )
    for n in policy.names:
        try:
            policy.campaign(n, policy.qs[0], 0)
        except ValueError as exc:
            raise ConfigError(f"[policy] {exc}") from None

    s = raw.get("surrogate", {})
    try:
        classifier = ClassifierConfig(
            k_neighbors=_get(s, "k_neighbors", int, 15, section="surrogate"),
            smoothing=_get(s, "smoothing", float, 1.0, section="surrogate"),
        )
        grid = s.get("lengthscale_grid")
        gp = GPConfig(
            lengthscale=_get(s, "lengthscale", float, 1.0, section="surrogate"),
            signal_variance=_get(s, "signal_variance", float, 1.0, section="surrogate"),
            noise_variance=_get(s, "noise_variance", float, 1e-4, section="surrogate"),
            jitter=_get(s, "jitter", float, 1e-8, section="surrogate"),
            lengthscale_grid=None if grid is None else tuple(float(v) for v in _as_list(grid)),
            fit_signal_variance=_get(s, "fit_signal_variance", bool, True, section="surrogate"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[surrogate] {exc}") from None

    e = raw.get("execution", {})
    execution = ExecutionConfig(
        repeats=_get(e, "repeats", int, 1, section="execution"),
        base_seed=_get(e, "base_seed", int, 0, section="execution"),
        output_dir=Path(str(e.get("output_dir", "results"))),
        jobs=_get(e, "jobs", int, 1, section="execution"),
    )
    if execution.repeats < 1:
        raise ConfigError("[execution] repeats must be >= 1")
    if execution.jobs < 1:
        raise ConfigError("[execution] jobs must be >= 1")

    ev = raw.get("evaluation", {})
    eval_qs = _orders(ev["eval_q"], "[evaluation] eval_q") if ev.get("eval_q") is not None else policy.qs
    report_q = _orders(ev.get("report_q", 1.0), "[evaluation] report_q")[0]
    return RunConfig(problem, kernel, policy, classifier, gp, execution, eval_qs, report_q)


def load_config(path: Union[str, Path], overrides: Optional[list[str]] = None) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such config file") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping of sections")
    for assignment in overrides or ():
        apply_override(raw, assignment)
    return build_config(raw, path.parent)

