"""Phased single-player policies (E3, E3-TS) and the UCB1 / Thompson baselines."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .env import BanditInstance, stream

EXPLORE = "explore"
EXPLOIT = "exploit"

_CEIL_SLACK = 1e-9


def ceil_int(x: float) -> int:
    """Ceiling that ignores float noise just above an integer."""
    return int(math.ceil(x - _CEIL_SLACK * max(1.0, abs(x))))


def log_in_base(x, base: float):
    if base == math.e:
        return np.log(x)
    return np.log(x) / np.log(base)


def parse_log_base(value) -> float:
    if value in ("e", "ln", math.e):
        return math.e
    base = float(value)
    if base <= 1.0:
        raise ValueError(f"log base must exceed 1, got {value!r}")
    return base


def _check_lower_bound(delta_lb: float) -> None:
    if not 0.0 < delta_lb <= 1.0:
        raise ValueError(f"gap lower bound must lie in (0, 1], got {delta_lb}")


def gamma_known(delta_lb: float) -> int:
    _check_lower_bound(delta_lb)
    return ceil_int(2.0 / delta_lb**2)


def gamma_beta_known(delta_lb: float) -> int:
    _check_lower_bound(delta_lb)
    return ceil_int(8.0 / delta_lb**2)


def gamma_unknown(t: int, delta: float, log_base: float = 2.0) -> int:
    """Growing exploration count ``ceil(log(t) ** delta)`` for an unknown gap."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    t = max(int(t), 2)
    return max(1, ceil_int(float(log_in_base(t, log_base)) ** delta))


@dataclass(frozen=True)
class GammaSchedule:
    """Per-arm exploration plays per epoch: fixed, or grown from ``delta``."""

    gamma: int | None = None
    delta: float | None = None
    log_base: float = 2.0

    def __post_init__(self):
        if (self.gamma is None) == (self.delta is None):
            raise ValueError("give exactly one of gamma (known gap) or delta (unknown gap)")
        if self.gamma is not None and self.gamma < 1:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")

    @property
    def fixed(self) -> bool:
        return self.gamma is not None

    def at(self, t: int) -> int:
        """Value used by an exploration phase whose first slot is ``t`` (1-based)."""
        if self.gamma is not None:
            return self.gamma
        return gamma_unknown(t, self.delta, self.log_base)


@dataclass
class EpochClock:
    """Phase machine: exploration of ``scale * N * gamma_l`` slots, then ``2**l`` slots of exploitation.

    ``t`` counts elapsed slots, starting at 0.
    """

    n_arms: int
    schedule: GammaSchedule
    scale: int = 1
    t: int = 0
    epoch: int = 1
    phase: str = EXPLORE
    offset: int = 0
    gamma: int = field(init=False)

    def __post_init__(self):
        self.gamma = self.schedule.at(self.t + 1)

    @property
    def explore_length(self) -> int:
        return self.scale * self.n_arms * self.gamma

    @property
    def exploit_length(self) -> int:
        return 2**self.epoch

    @property
    def phase_length(self) -> int:
        return self.explore_length if self.phase == EXPLORE else self.exploit_length

    @property
    def remaining(self) -> int:
        return self.phase_length - self.offset

    def advance(self, n: int = 1) -> bool:
        """Move ``n`` slots forward inside the current phase; True when the phase ended."""
        if n > self.remaining:
            raise ValueError("cannot advance past the end of the current phase")
        self.t += n
        self.offset += n
        if self.offset < self.phase_length:
            return False
        self.offset = 0
        if self.phase == EXPLORE:
            self.phase = EXPLOIT
        else:
            self.phase = EXPLORE
            self.epoch += 1
            self.gamma = self.schedule.at(self.t + 1)
        return True


def epoch_boundaries(n_arms: int, gamma: int, n_epochs: int, scale: int = 1) -> np.ndarray:
    """Closed form for fixed gamma: slots consumed through epoch l."""
    ls = np.arange(1, n_epochs + 1, dtype=np.int64)
    return scale * n_arms * gamma * ls + 2 ** (ls + 1) - 2


# -- E3 -------------------------------------------------------------------------------------


@dataclass
class E3State:
    sums: np.ndarray
    counts: np.ndarray
    choice: int | None = None

    @classmethod
    def empty(cls, n_arms: int) -> "E3State":
        return cls(np.zeros(n_arms), np.zeros(n_arms, dtype=np.int64))

    @property
    def sample_means(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), 0.0)

    def copy(self) -> "E3State":
        return E3State(self.sums.copy(), self.counts.copy(), self.choice)


def e3_act(state, clock: EpochClock) -> int:
    if clock.phase == EXPLORE:
        return clock.offset % clock.n_arms
    return state.choice


def e3_observe(state: E3State, clock: EpochClock, arm: int, reward: float) -> E3State:
    if clock.phase == EXPLORE:
        state.sums[arm] += reward
        state.counts[arm] += 1
    return state


def argmax_low(x) -> int:
    """Index of the maximum, lowest index on ties."""
    return int(np.argmax(np.asarray(x)))


def e3_select(state: E3State) -> int:
    if np.any(state.counts == 0):
        raise ValueError("every arm needs at least one exploration play before selection")
    state.choice = argmax_low(state.sample_means)
    return state.choice


# -- E3-TS ----------------------------------------------------------------------------------


@dataclass
class E3TSState:
    successes: np.ndarray
    failures: np.ndarray
    theta: np.ndarray | None = None
    choice: int | None = None

    @classmethod
    def empty(cls, n_arms: int) -> "E3TSState":
        return cls(np.zeros(n_arms, dtype=np.int64), np.zeros(n_arms, dtype=np.int64))

    def copy(self) -> "E3TSState":
        theta = None if self.theta is None else self.theta.copy()
        return E3TSState(self.successes.copy(), self.failures.copy(), theta, self.choice)


def e3ts_trial(reward, rng: np.random.Generator):
    """Bernoulli trial with success probability ``reward``; vectorized over arrays."""
    reward = np.asarray(reward, dtype=np.float64)
    bits = (rng.random(reward.shape) < reward).astype(np.int64)
    return int(bits) if bits.ndim == 0 else bits


def e3ts_observe(state: E3TSState, clock: EpochClock, arm: int, reward: float, rng) -> E3TSState:
    if clock.phase == EXPLORE:
        if e3ts_trial(reward, rng):
            state.successes[arm] += 1
        else:
            state.failures[arm] += 1
    return state


def beta_draws(successes, failures, rng: np.random.Generator) -> np.ndarray:
    return rng.beta(np.asarray(successes) + 1.0, np.asarray(failures) + 1.0)


def e3ts_select(state: E3TSState, rng: np.random.Generator) -> int:
    state.theta = beta_draws(state.successes, state.failures, rng)
    state.choice = argmax_low(state.theta)
    return state.choice


# -- baselines ------------------------------------------------------------------------------


@dataclass
class BaselineState:
    sums: np.ndarray
    counts: np.ndarray
    successes: np.ndarray
    failures: np.ndarray
    t: int = 0

    @classmethod
    def empty(cls, n_arms: int) -> "BaselineState":
        z = np.zeros(n_arms, dtype=np.int64)
        return cls(np.zeros(n_arms), z.copy(), z.copy(), z.copy())


def ucb1_index(sums, counts, t: int) -> np.ndarray:
    counts = np.asarray(counts, dtype=np.float64)
    return np.asarray(sums) / counts + np.sqrt(2.0 * math.log(t) / counts)


def ucb1_act(state: BaselineState, t: int) -> int:
    """Arm for slot ``t`` (1-based); the first N slots play each arm once."""
    n = state.counts.size
    if t <= n:
        return t - 1
    return argmax_low(ucb1_index(state.sums, state.counts, t))


def ts_act(state: BaselineState, rng: np.random.Generator) -> int:
    return argmax_low(beta_draws(state.successes, state.failures, rng))


# -- full runs ------------------------------------------------------------------------------


@dataclass
class SingleRun:
    """Everything a single-player replication produced, slot by slot."""

    actions: np.ndarray  # int8, arm per slot
    explore: np.ndarray  # bool, slot belongs to an exploration phase
    cost_slots: np.ndarray  # slot (1-based) at which an index computation was charged
    cost_counts: np.ndarray  # number of index computations charged at that slot
    boundaries: np.ndarray  # slots consumed through each completed epoch
    epoch_starts: np.ndarray  # first slot (1-based) of each epoch that began
    gammas: np.ndarray
    final_state: object = None

    @property
    def horizon(self) -> int:
        return self.actions.size


def _phased_run(instance: BanditInstance, horizon: int, schedule: GammaSchedule, thompson: bool,
                seed: int, replication: int) -> SingleRun:
    n = instance.n_arms
    reward_rng = stream(seed, "reward", 0, replication)
    trial_rng = stream(seed, "trial", 0, replication)
    theta_rng = stream(seed, "theta", 0, replication)
    state = E3TSState.empty(n) if thompson else E3State.empty(n)

    actions = np.empty(horizon, dtype=np.int8)
    explore = np.zeros(horizon, dtype=bool)
    cost_slots, boundaries, starts, gammas = [], [], [], []
    clock = EpochClock(n, schedule)
    while clock.t < horizon:
        starts.append(clock.t + 1)
        gammas.append(clock.gamma)
        # exploration: round robin, gamma plays per arm
        length = clock.explore_length
        run = min(length, horizon - clock.t)
        arms = np.arange(run) % n
        rewards = instance.rewards_from_uniform(arms, reward_rng.random(length)[:run])
        actions[clock.t:clock.t + run] = arms
        explore[clock.t:clock.t + run] = True
        if thompson:
            bits = e3ts_trial(rewards, trial_rng)
            state.successes += np.bincount(arms, weights=bits, minlength=n).astype(np.int64)
            state.failures += np.bincount(arms, weights=1 - bits, minlength=n).astype(np.int64)
        else:
            state.sums += np.bincount(arms, weights=rewards, minlength=n)
            state.counts += np.bincount(arms, minlength=n)
        clock.advance(run)
        if run < length:
            break
        if thompson:
            e3ts_select(state, theta_rng)
        else:
            e3_select(state)
        cost_slots.append(clock.t)
        # exploitation: observations leave the state untouched, so skip them
        run = min(clock.exploit_length, horizon - clock.t)
        actions[clock.t:clock.t + run] = state.choice
        finished = clock.advance(run)
        if finished:
            boundaries.append(clock.t)
    return SingleRun(
        actions=actions,
        explore=explore,
        cost_slots=np.array(cost_slots, dtype=np.int64),
        cost_counts=np.full(len(cost_slots), n, dtype=np.int64),
        boundaries=np.array(boundaries, dtype=np.int64),
        epoch_starts=np.array(starts, dtype=np.int64),
        gammas=np.array(gammas, dtype=np.int64),
        final_state=state,
    )


def run_e3(instance, horizon, schedule, seed=0, replication=0) -> SingleRun:
    return _phased_run(instance, horizon, schedule, False, seed, replication)


def run_e3ts(instance, horizon, schedule, seed=0, replication=0) -> SingleRun:
    return _phased_run(instance, horizon, schedule, True, seed, replication)


def _nonphased(actions, n_arms, final_state=None) -> SingleRun:
    horizon = actions.size
    empty = np.zeros(0, dtype=np.int64)
    return SingleRun(
        actions=actions,
        explore=np.zeros(horizon, dtype=bool),
        cost_slots=np.arange(1, horizon + 1, dtype=np.int64),
        cost_counts=np.full(horizon, n_arms, dtype=np.int64),
        boundaries=empty,
        epoch_starts=empty,
        gammas=empty,
        final_state=final_state,
    )


def run_ucb1(instance: BanditInstance, horizon: int, seed=0, replication=0) -> SingleRun:
    uniforms = stream(seed, "reward", 0, replication).random(horizon)
    kinds = np.full(instance.n_arms, instance.kind_code, dtype=np.int64)
    actions, counts, sums = kernels.ucb1_loop(instance.means, kinds, uniforms, horizon)
    state = BaselineState.empty(instance.n_arms)
    state.sums, state.counts, state.t = sums, counts, horizon
    return _nonphased(actions, instance.n_arms, state)


def run_ts(instance: BanditInstance, horizon: int, seed=0, replication=0) -> SingleRun:
    """Beta-Bernoulli Thompson Sampling, posterior updated every slot."""
    n = instance.n_arms
    uniforms = stream(seed, "reward", 0, replication).random(horizon)
    trial_u = stream(seed, "trial", 0, replication).random(horizon)
    theta_rng = stream(seed, "theta", 0, replication)
    state = BaselineState.empty(n)
    actions = np.empty(horizon, dtype=np.int8)
    a = np.ones(n)
    b = np.ones(n)
    for t in range(horizon):
        arm = int(np.argmax(theta_rng.beta(a, b)))
        reward = float(instance.rewards_from_uniform(arm, uniforms[t]))
        if trial_u[t] < reward:
            a[arm] += 1.0
        else:
            b[arm] += 1.0
        state.sums[arm] += reward
        actions[t] = arm
    state.successes = (a - 1).astype(np.int64)
    state.failures = (b - 1).astype(np.int64)
    state.counts = state.successes + state.failures
    state.t = horizon
    return _nonphased(actions, n, state)
