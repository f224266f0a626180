"""YAML experiment configuration, validated fully before anything is simulated."""
from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..env import FAMILIES, BanditInstance, gap_summary
from ..policy_multi import (
    ACCOUNTING_MODES,
    CostModel,
    EpsilonSchedule,
    MultiEpochClock,
    gamma_beta_multi,
    gamma_multi,
)
from ..policy_single import EpochClock, GammaSchedule, gamma_beta_known, gamma_known, parse_log_base

SINGLE_POLICIES = ("e3", "e3ts", "ucb1", "ts")
MULTI_POLICIES = ("de3", "de3ts")
PHASED = ("e3", "e3ts", "de3", "de3ts")


class ConfigError(ValueError):
    pass


@dataclass
class PolicySpec:
    name: str
    gamma: int | None = None
    delta_lb: float | None = None
    delta: float | None = None
    epsilon: float | None = None
    epsilon_delta: float | None = None
    accounting: str = "sequential"


@dataclass
class ExperimentConfig:
    means: list
    policy: PolicySpec
    family: str = "bernoulli"
    horizon_slots: int | None = None
    horizon_epochs: int | None = None
    runs: int = 1
    seed: int = 0
    cost_kind: str = "constant"
    cost_value: float = 0.0
    log_base: str = "2"
    grid_ratio: float = 1.2
    output: str | None = None

    # -- derived objects ---------------------------------------------------------------

    @property
    def instance(self) -> BanditInstance:
        return BanditInstance(np.array(self.means, dtype=float), self.family)

    @property
    def base(self) -> float:
        return parse_log_base(self.log_base)

    @property
    def cost(self) -> CostModel:
        return CostModel(self.cost_kind, self.cost_value)

    @property
    def is_multi(self) -> bool:
        return self.policy.name in MULTI_POLICIES

    def gamma_schedule(self) -> GammaSchedule | None:
        p = self.policy
        if p.name not in PHASED:
            return None
        if p.gamma is not None:
            return GammaSchedule(gamma=int(p.gamma), log_base=self.base)
        if p.delta_lb is not None:
            if p.name == "e3":
                g = gamma_known(p.delta_lb)
            elif p.name == "e3ts":
                g = gamma_beta_known(p.delta_lb)
            else:
                m = self.instance.n_players
                fn = gamma_multi if p.name == "de3" else gamma_beta_multi
                g = fn(m, p.delta_lb, self._fixed_eps())
            return GammaSchedule(gamma=g, log_base=self.base)
        return GammaSchedule(delta=p.delta, log_base=self.base)

    def _fixed_eps(self) -> float:
        if self.policy.epsilon is None:
            raise ConfigError(f"{self.policy.name}: deriving gamma from delta_lb needs a fixed epsilon")
        return self.policy.epsilon

    def epsilon_schedule(self) -> EpsilonSchedule | None:
        if not self.is_multi:
            return None
        p = self.policy
        return EpsilonSchedule(eps=p.epsilon, delta=p.epsilon_delta, log_base=self.base, delta_lb=p.delta_lb)

    def clock(self):
        sched = self.gamma_schedule()
        if sched is None:
            return None
        inst = self.instance
        if self.is_multi:
            return MultiEpochClock(inst.n_players, inst.n_arms, sched, self.policy.accounting)
        return EpochClock(inst.n_arms, sched)

    def boundaries(self, limit: int | None = None, n_epochs: int | None = None) -> np.ndarray:
        """Slots consumed through each epoch, walking the deterministic clock."""
        if limit is None and n_epochs is None:
            raise ValueError("boundaries needs a slot limit or an epoch count")
        clock = self.clock()
        if clock is None:
            return np.zeros(0, dtype=np.int64)
        out = []
        while True:
            if n_epochs is not None and len(out) >= n_epochs:
                break
            clock.advance(clock.remaining)
            clock.advance(clock.remaining)
            if limit is not None and clock.t > limit:
                break
            out.append(clock.t)
        return np.array(out, dtype=np.int64)

    @property
    def horizon(self) -> int:
        if self.horizon_slots is not None:
            return int(self.horizon_slots)
        return int(self.boundaries(n_epochs=self.horizon_epochs)[-1])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["policy"] = asdict(self.policy)
        return d


def _policy_from(raw, where: str) -> PolicySpec:
    if isinstance(raw, str):
        raw = {"name": raw}
    if not isinstance(raw, dict) or "name" not in raw:
        raise ConfigError(f"{where}: each policy needs a name")
    known = set(PolicySpec.__dataclass_fields__)
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"{where}: unknown policy keys {sorted(extra)}")
    return PolicySpec(**raw)


def _expect(d: dict, allowed: set, where: str):
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


TOP_KEYS = {"instance", "policies", "policy", "horizon", "runs", "seed", "cost", "log_base", "grid", "output"}


def configs_from_dict(raw: dict, where: str = "config") -> list[ExperimentConfig]:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: top level must be a mapping")
    _expect(raw, TOP_KEYS, where)
    inst = raw.get("instance") or {}
    _expect(inst, {"means", "family"}, f"{where}.instance")
    if "means" not in inst:
        raise ConfigError(f"{where}: instance.means is required")
    horizon = raw.get("horizon") or {}
    if isinstance(horizon, int):
        horizon = {"slots": horizon}
    _expect(horizon, {"slots", "epochs"}, f"{where}.horizon")
    cost = raw.get("cost") or {}
    if isinstance(cost, (int, float)):
        cost = {"kind": "constant", "value": cost}
    _expect(cost, {"kind", "value"}, f"{where}.cost")
    grid = raw.get("grid") or {}
    _expect(grid, {"ratio"}, f"{where}.grid")
    policies = raw.get("policies")
    if policies is None and "policy" in raw:
        policies = [raw["policy"]]
    if not policies:
        raise ConfigError(f"{where}: at least one policy is required")
    out = []
    for k, p in enumerate(policies):
        cfg = ExperimentConfig(
            means=copy.deepcopy(inst["means"]),
            family=inst.get("family", "bernoulli"),
            policy=_policy_from(p, f"{where}.policies[{k}]"),
            horizon_slots=horizon.get("slots"),
            horizon_epochs=horizon.get("epochs"),
            runs=raw.get("runs", 1),
            seed=raw.get("seed", 0),
            cost_kind=cost.get("kind", "constant"),
            cost_value=cost.get("value", 0.0),
            log_base=str(raw.get("log_base", "2")),
            grid_ratio=grid.get("ratio", 1.2),
            output=raw.get("output"),
        )
        validate(cfg, f"{where}.policies[{k}]")
        out.append(cfg)
    return out


def config_to_file_dict(cfg: ExperimentConfig) -> dict:
    """Inverse of :func:`configs_from_dict` for one policy, every default spelled out."""
    return {
        "instance": {"means": copy.deepcopy(cfg.means), "family": cfg.family},
        "policies": [dict(cfg.to_dict()["policy"])],
        "horizon": {"slots": cfg.horizon_slots, "epochs": cfg.horizon_epochs},
        "runs": cfg.runs,
        "seed": cfg.seed,
        "cost": {"kind": cfg.cost_kind, "value": cfg.cost_value},
        "log_base": cfg.log_base,
        "grid": {"ratio": cfg.grid_ratio},
        "output": cfg.output,
    }


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(config_to_file_dict(cfg), sort_keys=False)


def load_yaml(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from e
    try:
        return yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: malformed YAML ({e.__class__.__name__})") from e


def load_configs(path) -> list[ExperimentConfig]:
    return configs_from_dict(load_yaml(path), str(path))


def validate(cfg: ExperimentConfig, where: str = "config") -> None:
    """Check every precondition; raises ConfigError with the offending field."""
    p = cfg.policy
    try:
        inst = cfg.instance
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from e
    if cfg.family not in FAMILIES:
        raise ConfigError(f"{where}: unknown family {cfg.family!r}")
    if p.name not in SINGLE_POLICIES + MULTI_POLICIES:
        raise ConfigError(f"{where}: unknown policy {p.name!r}")
    if p.name in MULTI_POLICIES and not inst.is_multi:
        raise ConfigError(f"{where}: {p.name} needs an M x N mean matrix")
    if p.name in SINGLE_POLICIES and inst.is_multi:
        raise ConfigError(f"{where}: {p.name} needs a vector of arm means")
    if not isinstance(cfg.runs, int) or cfg.runs < 1:
        raise ConfigError(f"{where}: runs must be a positive integer")
    if not isinstance(cfg.seed, int) or cfg.seed < 0 or cfg.seed >= 2**64:
        raise ConfigError(f"{where}: seed must be an unsigned 64-bit integer")
    if (cfg.horizon_slots is None) == (cfg.horizon_epochs is None):
        raise ConfigError(f"{where}: give exactly one of horizon.slots or horizon.epochs")
    if cfg.horizon_slots is not None and (not isinstance(cfg.horizon_slots, int) or cfg.horizon_slots < 1):
        raise ConfigError(f"{where}: horizon.slots must be a positive integer")
    if cfg.horizon_epochs is not None:
        if p.name not in PHASED:
            raise ConfigError(f"{where}: horizon in epochs only applies to phased policies")
        if not isinstance(cfg.horizon_epochs, int) or not 1 <= cfg.horizon_epochs <= 40:
            raise ConfigError(f"{where}: horizon.epochs must be an integer in [1, 40]")
    if not cfg.grid_ratio > 1.0:
        raise ConfigError(f"{where}: grid.ratio must exceed 1")
    try:
        cfg.base
        cost = cfg.cost
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from e
    if p.name in SINGLE_POLICIES and cost.kind != "constant":
        raise ConfigError(f"{where}: single-player policies take a constant cost")
    if p.accounting not in ACCOUNTING_MODES:
        raise ConfigError(f"{where}: accounting must be one of {ACCOUNTING_MODES}")
    if p.name in PHASED:
        given = [x is not None for x in (p.gamma, p.delta_lb, p.delta)]
        if sum(given) != 1:
            raise ConfigError(f"{where}: {p.name} needs exactly one of gamma, delta_lb or delta")
        if p.gamma is not None and (not isinstance(p.gamma, int) or p.gamma < 1):
            raise ConfigError(f"{where}: gamma must be a positive integer")
    if p.name in MULTI_POLICIES:
        if (p.epsilon is None) == (p.epsilon_delta is None):
            raise ConfigError(f"{where}: {p.name} needs exactly one of epsilon or epsilon_delta")
        if inst.n_arms > 8:
            raise ConfigError(f"{where}: multiplayer instances are limited to N <= 8")
    try:
        cfg.gamma_schedule()
        eps = cfg.epsilon_schedule()
        if eps is not None:
            eps.check(inst.n_players)
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from e
    if p.name in MULTI_POLICIES and not math.isfinite(gap_summary(inst).delta_max):
        raise ConfigError(f"{where}: degenerate instance")
