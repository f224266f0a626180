"""Replicated runs, aggregation and per-policy bound curves."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import regret
from ..env import gap_summary
from ..policy_multi import run_multi
from ..policy_single import run_e3, run_e3ts, run_ts, run_ucb1
from .config import ExperimentConfig, validate


def logging_grid(horizon: int, ratio: float = 1.2, extra=()) -> np.ndarray:
    """Slots ``ceil(ratio**k)`` up to ``horizon``, plus ``extra`` points and the horizon itself."""
    k_max = int(math.floor(math.log(horizon) / math.log(ratio))) + 1
    pts = np.ceil(ratio ** np.arange(k_max + 1)).astype(np.int64)
    extra = np.asarray(extra, dtype=np.int64)
    pts = np.concatenate([pts, extra, [horizon]])
    return np.unique(pts[(pts >= 1) & (pts <= horizon)])


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    grid: np.ndarray
    ledgers: list
    boundaries: np.ndarray
    bound: np.ndarray  # nan where no bound applies
    explore_collisions: list

    def _stack(self, attr):
        return np.stack([getattr(led, attr) for led in self.ledgers])

    @property
    def mean_explore(self):
        return self._stack("explore").mean(axis=0)

    @property
    def mean_exploit(self):
        return self._stack("exploit").mean(axis=0)

    @property
    def mean_comm(self):
        return self._stack("comm").mean(axis=0)

    @property
    def mean_total(self):
        return self.mean_explore + self.mean_exploit + self.mean_comm

    @property
    def std_total(self):
        return self._stack("total").std(axis=0)

    @property
    def epoch(self):
        return self.ledgers[0].epoch

    def records(self) -> list[dict]:
        return [
            {
                "t": int(t),
                "regret_explore": float(e),
                "regret_exploit": float(i),
                "regret_comm": float(c),
                "epoch": int(ep),
                "bound": None if np.isnan(b) else float(b),
            }
            for t, e, i, c, ep, b in zip(self.grid, self.mean_explore, self.mean_exploit, self.mean_comm,
                                         self.epoch, self.bound)
        ]

    def run_records(self, k: int) -> list[dict]:
        led = self.ledgers[k]
        return [
            {"t": int(t), "regret_explore": float(e), "regret_exploit": float(i), "regret_comm": float(c),
             "epoch": int(ep), "bound": None if np.isnan(b) else float(b)}
            for t, e, i, c, ep, b in zip(led.t, led.explore, led.exploit, led.comm, led.epoch, self.bound)
        ]


def bound_curve(cfg: ExperimentConfig, grid) -> np.ndarray:
    """Theoretical curve matching the policy; nan for slots < 2 and for TS."""
    grid = np.asarray(grid)
    out = np.full(grid.shape, np.nan)
    ok = grid >= 2
    if not ok.any():
        return out
    t = grid[ok]
    inst = cfg.instance
    gs = gap_summary(inst)
    name = cfg.policy.name
    if name == "ts":
        return out
    if name == "ucb1":
        out[ok] = regret.bound_ucb1(t, gs.suboptimal_gaps)
        return out
    sched = cfg.gamma_schedule()
    m = inst.n_players
    if cfg.is_multi:
        eps = cfg.epsilon_schedule()
        unit = cfg.cost.unit(eps.eps if eps.eps is not None else eps.at(int(grid.max())))
    else:
        unit = cfg.cost.value
    if not sched.fixed:
        spec = regret.BoundSpec(n_arms=inst.n_arms, n_players=m, delta_max=gs.delta_max, delta_min=gs.delta_min,
                                delta=sched.delta, cost=unit, log_base=cfg.base)
        out[ok] = regret.bound_unknown(t, spec).value
        return out
    spec = regret.BoundSpec(n_arms=inst.n_arms, n_players=m, delta_max=gs.delta_max, gamma=sched.gamma,
                            cost=unit, log_base=cfg.base)
    fn = regret.bound_e3ts if name in ("e3ts", "de3ts") else regret.bound_e3
    out[ok] = fn(t, spec)
    return out


def run_replication(cfg: ExperimentConfig, replication: int, grid):
    """One seeded run; returns its ledger and the exploration collision count."""
    inst = cfg.instance
    horizon = cfg.horizon
    gs = gap_summary(inst)
    name = cfg.policy.name
    if cfg.is_multi:
        run = run_multi(inst, horizon, cfg.gamma_schedule(), cfg.epsilon_schedule(), cfg.cost,
                        thompson=name == "de3ts", accounting=cfg.policy.accounting, seed=cfg.seed,
                        replication=replication)
        return regret.ledger_multi(run, inst.means, gs.mu_star, grid), run.explore_collisions
    if name == "e3":
        run = run_e3(inst, horizon, cfg.gamma_schedule(), cfg.seed, replication)
    elif name == "e3ts":
        run = run_e3ts(inst, horizon, cfg.gamma_schedule(), cfg.seed, replication)
    elif name == "ucb1":
        run = run_ucb1(inst, horizon, cfg.seed, replication)
    else:
        run = run_ts(inst, horizon, cfg.seed, replication)
    return regret.ledger_single(run, gs.gaps, cfg.cost.value, grid), 0


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    validate(cfg)
    horizon = cfg.horizon
    boundaries = cfg.boundaries(limit=horizon)
    grid = logging_grid(horizon, cfg.grid_ratio, boundaries)
    ledgers, collisions = [], []
    for r in range(cfg.runs):
        led, col = run_replication(cfg, r, grid)
        ledgers.append(led)
        collisions.append(col)
    return ExperimentResult(cfg, grid, ledgers, boundaries, bound_curve(cfg, grid), collisions)
