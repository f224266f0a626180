"""Pseudo-regret ledgers, theoretical bound curves and numeric checks of the analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import kernels
from .env import GapSummary
from .policy_single import log_in_base


@dataclass
class RegretLedger:
    """Cumulative pseudo-regret sampled at slots ``t`` (1-based)."""

    t: np.ndarray
    explore: np.ndarray
    exploit: np.ndarray
    comm: np.ndarray
    epoch: np.ndarray
    plays: np.ndarray | None = None  # per-arm (single) play counts over the whole run
    computations: int = 0  # m(T)
    collisions: np.ndarray | None = None  # cumulative colliding player-slots (multi)

    @property
    def total(self) -> np.ndarray:
        return self.explore + self.exploit + self.comm

    def at(self, t: int) -> float:
        i = int(np.searchsorted(self.t, t))
        if i >= self.t.size or self.t[i] != t:
            raise KeyError(f"slot {t} not on the logging grid")
        return float(self.total[i])


def epoch_of_slot(t, epoch_starts) -> np.ndarray:
    """Epoch index (1-based) containing each slot; 0 for policies without epochs."""
    t = np.asarray(t)
    if len(epoch_starts) == 0:
        return np.zeros(t.shape, dtype=np.int64)
    return np.searchsorted(np.asarray(epoch_starts), t, side="right").astype(np.int64)


def _cumulative_at(per_slot, grid):
    c = np.cumsum(per_slot)
    return c[np.asarray(grid) - 1]


def _costs_at(cost_slots, amounts, grid):
    cost_slots = np.asarray(cost_slots)
    if cost_slots.size == 0:
        return np.zeros(len(grid))
    c = np.cumsum(np.asarray(amounts, dtype=np.float64))
    idx = np.searchsorted(cost_slots, grid, side="right")
    return np.where(idx > 0, c[np.maximum(idx - 1, 0)], 0.0)


def ledger_single(run, gaps, cost: float, grid) -> RegretLedger:
    """Ledger for a single-player run; ``cost`` is charged per index computation."""
    gaps = np.asarray(gaps, dtype=np.float64)
    grid = np.asarray(grid, dtype=np.int64)
    deficit = gaps[run.actions]
    explore = _cumulative_at(np.where(run.explore, deficit, 0.0), grid)
    exploit = _cumulative_at(np.where(run.explore, 0.0, deficit), grid)
    comm = _costs_at(run.cost_slots, cost * run.cost_counts, grid)
    plays = np.bincount(run.actions, minlength=gaps.size)
    return RegretLedger(grid, explore, exploit, comm, epoch_of_slot(grid, run.epoch_starts), plays,
                        int(run.cost_counts.sum()))


def ledger_multi(run, means, mu_star: float, grid) -> RegretLedger:
    grid = np.asarray(grid, dtype=np.int64)
    deficit, collided = kernels.slot_deficits(np.ascontiguousarray(run.actions), np.asarray(means, dtype=np.float64),
                                              float(mu_star))
    explore = _cumulative_at(np.where(run.explore, deficit, 0.0), grid)
    exploit = _cumulative_at(np.where(run.explore, 0.0, deficit), grid)
    comm = _costs_at(run.cost_slots, run.cost_amounts, grid)
    return RegretLedger(grid, explore, exploit, comm, epoch_of_slot(grid, run.epoch_starts),
                        computations=len(run.cost_slots), collisions=_cumulative_at(collided, grid))


def pseudo_regret_single(plays, gaps, computations: int = 0, cost: float = 0.0, t: int | None = None) -> float:
    """``sum_j gap_j * n_j + C * m``."""
    plays = np.asarray(plays)
    if t is not None and int(plays.sum()) != t:
        raise ValueError(f"play counts sum to {int(plays.sum())}, expected {t}")
    return float(np.dot(np.asarray(gaps, dtype=np.float64), plays) + cost * computations)


def pseudo_regret_multi(actions, means, mu_star: float, explore=None, cost_amounts=()) -> tuple[float, float, float]:
    """(exploration, exploitation, cost) pseudo-regret of a ``(T, M)`` action history."""
    actions = np.atleast_2d(np.asarray(actions, dtype=np.int8))
    deficit, _ = kernels.slot_deficits(np.ascontiguousarray(actions), np.asarray(means, dtype=np.float64),
                                       float(mu_star))
    if explore is None:
        explore = np.zeros(actions.shape[0], dtype=bool)
    explore = np.asarray(explore, dtype=bool)
    return float(deficit[explore].sum()), float(deficit[~explore].sum()), float(np.sum(cost_amounts))


# -- bound curves ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundSpec:
    n_arms: int
    delta_max: float
    gamma: float = 0.0
    cost: float = 0.0
    n_players: int = 1
    delta_min: float | None = None
    delta: float | None = None
    log_base: float = 2.0
    gaps: tuple[float, ...] = ()

    def __post_init__(self):
        if self.n_arms < 1 or self.n_players < 1:
            raise ValueError("arm and player counts must be positive")
        if self.delta_max < 0 or self.gamma < 0 or self.cost < 0:
            raise ValueError("bound parameters must be nonnegative")
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")

    @classmethod
    def from_gaps(cls, summary: GapSummary, n_arms: int, n_players: int = 1, **kw) -> "BoundSpec":
        return cls(n_arms=n_arms, n_players=n_players, delta_max=summary.delta_max, delta_min=summary.delta_min,
                   gaps=tuple(float(g) for g in summary.suboptimal_gaps), **kw)


def _log(t, base):
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 2):
        raise ValueError("bound curves need T >= 2")
    return log_in_base(t, base)


def _phased_bound(t, spec: BoundSpec, tail: float):
    lg = _log(t, spec.log_base)
    mn = spec.n_players * spec.n_arms
    return mn * spec.delta_max * spec.gamma * lg + mn * spec.cost * lg + tail * mn * spec.delta_max


def bound_e3(t, spec: BoundSpec):
    return _phased_bound(t, spec, 8.0)


def bound_e3ts(t, spec: BoundSpec):
    return _phased_bound(t, spec, 16.0)


# the team curves are the same expressions with M carried in BoundSpec
bound_de3 = bound_e3
bound_de3ts = bound_e3ts


def log2_b_delta(delta_min: float, delta: float) -> float:
    """log2 of ``B(delta) = 2 ** ((delta_min^2 / 4) ** (-1/delta))``."""
    return (delta_min**2 / 4.0) ** (-1.0 / delta)


@dataclass(frozen=True)
class UnknownGapBound:
    leading: np.ndarray | float
    log2_b: float  # log2 of the constant B(delta)
    multiplier: float  # factor in front of B(delta)

    @property
    def value(self):
        """Full bound; inf once B(delta) leaves float range."""
        const = math.inf if self.log2_b > 1000 else self.multiplier * 2.0**self.log2_b
        return self.leading + const


def bound_unknown(t, spec: BoundSpec) -> UnknownGapBound:
    """Unknown-gap curve ``N*dmax*log^(1+d) T + N*C*log T + N*dmax*B(d)``, with B in log2 form.

    With ``n_players > 1`` every N becomes M*N and B(d) carries an unspecified
    constant factor, taken as 1 here.
    """
    if spec.delta is None or spec.delta_min is None:
        raise ValueError("unknown-gap bound needs delta and delta_min")
    lg = _log(t, spec.log_base)
    mn = spec.n_players * spec.n_arms
    leading = mn * spec.delta_max * lg ** (1.0 + spec.delta) + mn * spec.cost * lg
    return UnknownGapBound(leading, log2_b_delta(spec.delta_min, spec.delta), mn * spec.delta_max)


def bound_ucb1(t, gaps, log_base: float = math.e):
    gaps = np.asarray([g for g in gaps if g > 0], dtype=np.float64)
    lg = _log(t, log_base)
    return 8.0 * lg * np.sum(1.0 / gaps) + (1.0 + math.pi**2 / 3.0) * np.sum(gaps)


def chernoff_tail(a: float, t: float) -> float:
    if a < 0 or t < 0:
        raise ValueError("deviation and sample count must be nonnegative")
    return math.exp(-2.0 * a * a * t)


def beta_cdf(a: int, b: int, x: float) -> float:
    _check_cdf_args(a, b, x)
    return float(special.betainc(a, b, x))


def binom_cdf(n: int, p: float, k: int) -> float:
    """Binomial CDF by direct summation of the mass function."""
    if n < 0 or not 0.0 <= p <= 1.0:
        raise ValueError("binomial needs n >= 0 and p in [0, 1]")
    if k < 0:
        return 0.0
    if k >= n:
        return 1.0
    return math.fsum(math.comb(n, i) * p**i * (1.0 - p) ** (n - i) for i in range(k + 1))


def cdf_identity_residual(a: int, b: int, x: float) -> float:
    """Defect of ``F_beta(a, b; x) = 1 - F_binom(a+b-1, x; a-1)``."""
    _check_cdf_args(a, b, x)
    return abs(beta_cdf(a, b, x) - (1.0 - binom_cdf(a + b - 1, x, a - 1)))


def _check_cdf_args(a, b, x):
    if int(a) != a or int(b) != b or a < 1 or b < 1:
        raise ValueError("beta parameters must be integers >= 1")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")


# -- Monte Carlo checks of the tail lemmas --------------------------------------------------


def mc_slack(p: float, reps: int) -> float:
    """Three binomial standard errors at probability ``p``."""
    return 3.0 * math.sqrt(p / reps)


def sample_mean_inversions(means, gamma: int, n_epochs: int, reps: int, rng: np.random.Generator) -> np.ndarray:
    """Frequency over ``reps`` of ``mean_best(l) < mean_j(l)`` after l epochs of ``gamma`` plays per arm.

    Bernoulli rewards.  Returns ``(n_epochs, N)``; the best arm's column is 0.
    """
    means = np.asarray(means, dtype=np.float64)
    best = int(np.argmax(means))
    successes = np.zeros((reps, means.size))
    out = np.zeros((n_epochs, means.size))
    for l in range(1, n_epochs + 1):
        successes += rng.binomial(gamma, means, size=(reps, means.size))
        xbar = successes / (gamma * l)
        out[l - 1] = (xbar[:, [best]] < xbar).mean(axis=0)
    out[:, best] = 0.0
    return out


def thompson_inversions(means, gamma: int, n_epochs: int, reps: int, rng: np.random.Generator) -> np.ndarray:
    """As :func:`sample_mean_inversions` but comparing Beta posterior draws."""
    means = np.asarray(means, dtype=np.float64)
    best = int(np.argmax(means))
    successes = np.zeros((reps, means.size))
    out = np.zeros((n_epochs, means.size))
    for l in range(1, n_epochs + 1):
        successes += rng.binomial(gamma, means, size=(reps, means.size))
        theta = rng.beta(successes + 1.0, gamma * l - successes + 1.0)
        out[l - 1] = (theta[:, [best]] < theta).mean(axis=0)
    out[:, best] = 0.0
    return out
