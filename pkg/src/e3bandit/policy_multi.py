"""Decentralized dE3 / dE3-TS: synchronized epochs, staggered exploration, auction matching."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .env import BanditInstance, resolve_collisions, stream
from .matching import AuctionTrace, Matching, auction_run, comm_slots, quantize
from .policy_single import (
    EXPLORE,
    EpochClock,
    GammaSchedule,
    beta_draws,
    ceil_int,
    e3ts_trial,
    log_in_base,
)

ACCOUNTING_MODES = ("sequential", "staggered")


def _check_eps(n_players: int, delta_lb: float, eps: float) -> float:
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    room = delta_lb - (n_players + 1) * eps
    if room <= 0:
        raise ValueError(
            f"need 0 < eps < delta_lb/(M+1): eps={eps}, delta_lb={delta_lb}, M={n_players} "
            f"gives delta_lb/(M+1)={delta_lb / (n_players + 1):.6g}"
        )
    return room


def gamma_multi(n_players: int, delta_lb: float, eps: float) -> int:
    room = _check_eps(n_players, delta_lb, eps)
    return ceil_int(2.0 * n_players**2 / room**2)


def gamma_beta_multi(n_players: int, delta_lb: float, eps: float) -> int:
    room = _check_eps(n_players, delta_lb, eps)
    return ceil_int(8.0 * n_players**2 / room**2)


def epsilon_decay(t: int, delta: float, log_base: float = 2.0) -> float:
    """``log(t) ** -delta``, capped at 1 for the first slots."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    t = max(int(t), 2)
    return min(1.0, float(log_in_base(t, log_base)) ** (-delta))


@dataclass(frozen=True)
class EpsilonSchedule:
    eps: float | None = None
    delta: float | None = None
    log_base: float = 2.0
    delta_lb: float | None = None

    def __post_init__(self):
        if (self.eps is None) == (self.delta is None):
            raise ValueError("give exactly one of eps (fixed) or delta (decaying)")
        if self.eps is not None and self.eps <= 0:
            raise ValueError("epsilon must be positive")
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")

    def check(self, n_players: int) -> None:
        if self.eps is not None and self.delta_lb is not None:
            _check_eps(n_players, self.delta_lb, self.eps)

    def at(self, t: int) -> float:
        if self.eps is not None:
            return self.eps
        return epsilon_decay(t, self.delta, self.log_base)


@dataclass(frozen=True)
class CostModel:
    """Regret charged per matching (multi) or per epoch of index computation (single)."""

    kind: str = "constant"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "inverse_epsilon"):
            raise ValueError(f"unknown cost model {self.kind!r}")
        if self.value < 0:
            raise ValueError("cost must be nonnegative")

    def unit(self, eps: float | None = None) -> float:
        if self.kind == "constant":
            return self.value
        if not eps:
            raise ValueError("inverse-epsilon cost needs a positive epsilon")
        return 1.0 / eps


@dataclass
class PlayerState:
    player: int
    sums: np.ndarray
    counts: np.ndarray
    successes: np.ndarray
    failures: np.ndarray
    assignment: int | None = None

    @classmethod
    def empty(cls, player: int, n_arms: int) -> "PlayerState":
        z = np.zeros(n_arms, dtype=np.int64)
        return cls(player, np.zeros(n_arms), z.copy(), z.copy(), z.copy())

    @property
    def sample_means(self) -> np.ndarray:
        return self.sums / np.maximum(self.counts, 1)


class MultiEpochClock(EpochClock):
    """Common schedule of all players.

    ``accounting="sequential"`` budgets exploration as if players took turns,
    ``M*N*gamma`` slots; ``"staggered"`` uses the ``N*gamma`` slots the
    offset round robin actually needs.
    """

    def __init__(self, n_players: int, n_arms: int, schedule: GammaSchedule, accounting: str = "sequential"):
        if accounting not in ACCOUNTING_MODES:
            raise ValueError(f"accounting must be one of {ACCOUNTING_MODES}, got {accounting!r}")
        self.n_players = n_players
        self.accounting = accounting
        super().__init__(n_arms, schedule, scale=n_players if accounting == "sequential" else 1)

    @property
    def learning_length(self) -> int:
        """Slots of the phase whose rewards update the statistics."""
        return self.n_arms * self.gamma


def de3_act(player: PlayerState, clock: EpochClock) -> int:
    if clock.phase == EXPLORE:
        return (player.player + clock.offset) % clock.n_arms
    return player.assignment


def staggered_arms(player: int, n_arms: int, length: int) -> np.ndarray:
    return (player + np.arange(length)) % n_arms


@dataclass
class EpochMatching:
    matching: Matching
    trace: AuctionTrace
    eps: float
    cost: float
    quantized: np.ndarray


def run_epoch_matching(indices, eps: float, cost: CostModel, players: list[PlayerState] | None = None) -> EpochMatching:
    """Quantize all players' indices at ``eps``, auction at ``eps``, charge ``M*N*C(eps)``."""
    indices = np.asarray(indices, dtype=np.float64)
    m, n = indices.shape
    q = np.clip(quantize(indices, eps), 0.0, 1.0)
    matching, trace = auction_run(q, eps)
    # bid field gets at least one bit even while a decaying eps is still near 1
    trace.comm = comm_slots(m, n, min(eps, 0.5), max(trace.iterations, 1))
    if players is not None:
        for p, a in zip(players, matching.arms):
            p.assignment = a
    return EpochMatching(matching, trace, eps, m * n * cost.unit(eps), q)


@dataclass
class MultiRun:
    actions: np.ndarray  # (T, M) int8
    explore: np.ndarray  # (T,) bool
    cost_slots: np.ndarray
    cost_amounts: np.ndarray
    boundaries: np.ndarray
    epoch_starts: np.ndarray
    gammas: np.ndarray
    epsilons: np.ndarray
    matchings: list[EpochMatching] = field(default_factory=list)
    explore_collisions: int = 0
    players: list[PlayerState] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return self.actions.shape[0]


def multi_horizon(n_players, n_arms, gamma, n_epochs, accounting="sequential") -> int:
    scale = n_players if accounting == "sequential" else 1
    return int(scale * n_arms * gamma * n_epochs + 2 ** (n_epochs + 1) - 2)


def run_multi(instance: BanditInstance, horizon: int, schedule: GammaSchedule, eps_schedule: EpsilonSchedule,
              cost: CostModel, thompson: bool = False, accounting: str = "sequential", seed: int = 0,
              replication: int = 0) -> MultiRun:
    """One replication of dE3 (``thompson=False``) or dE3-TS."""
    if not instance.is_multi:
        raise ValueError("multiplayer run needs an (M, N) mean matrix")
    m, n = instance.means.shape
    eps_schedule.check(m)
    players = [PlayerState.empty(i, n) for i in range(m)]
    reward_rngs = [stream(seed, "reward", i, replication) for i in range(m)]
    trial_rngs = [stream(seed, "trial", i, replication) for i in range(m)]
    theta_rngs = [stream(seed, "theta", i, replication) for i in range(m)]

    actions = np.empty((horizon, m), dtype=np.int8)
    explore = np.zeros(horizon, dtype=bool)
    out = MultiRun(actions, explore, None, None, None, None, None, None, players=players)
    cost_slots, cost_amounts, boundaries, starts, gammas, epsilons = [], [], [], [], [], []
    clock = MultiEpochClock(m, n, schedule, accounting)
    while clock.t < horizon:
        t0 = clock.t
        starts.append(t0 + 1)
        gammas.append(clock.gamma)
        eps = eps_schedule.at(t0 + 1)
        epsilons.append(eps)
        length = clock.explore_length
        learn = clock.learning_length
        run = min(length, horizon - t0)
        block = np.stack([staggered_arms(i, n, run) for i in range(m)], axis=1)
        drawn = np.empty((run, m))
        for i in range(m):
            u = reward_rngs[i].random(length)[:run]
            drawn[:, i] = instance.rewards_from_uniform(block[:, i], u, player=i)
        realized = resolve_collisions(block, drawn)
        out.explore_collisions += _collision_slots(block)
        # only the first N*gamma slots feed the statistics; under sequential accounting
        # the remaining slots keep the collision-free rotation going
        k = min(run, learn)
        for i, p in enumerate(players):
            arms, rew = block[:k, i], realized[:k, i]
            if thompson:
                bits = e3ts_trial(rew, trial_rngs[i])
                p.successes += np.bincount(arms, weights=bits, minlength=n).astype(np.int64)
                p.failures += np.bincount(arms, weights=1 - bits, minlength=n).astype(np.int64)
            else:
                p.sums += np.bincount(arms, weights=rew, minlength=n)
                p.counts += np.bincount(arms, minlength=n)
        actions[t0:t0 + run] = block
        explore[t0:t0 + run] = True
        clock.advance(run)
        if run < length:
            break

        if thompson:
            indices = np.stack([beta_draws(p.successes, p.failures, theta_rngs[i]) for i, p in enumerate(players)])
        else:
            indices = np.stack([p.sample_means for p in players])
        em = run_epoch_matching(indices, eps, cost, players)
        out.matchings.append(em)
        cost_slots.append(clock.t)
        cost_amounts.append(em.cost)

        run = min(clock.exploit_length, horizon - clock.t)
        actions[clock.t:clock.t + run] = np.array(em.matching.arms, dtype=np.int8)
        if clock.advance(run):
            boundaries.append(clock.t)

    out.cost_slots = np.array(cost_slots, dtype=np.int64)
    out.cost_amounts = np.array(cost_amounts, dtype=np.float64)
    out.boundaries = np.array(boundaries, dtype=np.int64)
    out.epoch_starts = np.array(starts, dtype=np.int64)
    out.gammas = np.array(gammas, dtype=np.int64)
    out.epsilons = np.array(epsilons, dtype=np.float64)
    return out


def _collision_slots(block) -> int:
    srt = np.sort(np.asarray(block), axis=1)
    return int(np.count_nonzero((srt[:, 1:] == srt[:, :-1]).any(axis=1)))


def run_de3(instance, horizon, schedule, eps_schedule, cost, accounting="sequential", seed=0, replication=0):
    return run_multi(instance, horizon, schedule, eps_schedule, cost, False, accounting, seed, replication)


def run_de3ts(instance, horizon, schedule, eps_schedule, cost, accounting="sequential", seed=0, replication=0):
    return run_multi(instance, horizon, schedule, eps_schedule, cost, True, accounting, seed, replication)
