"""Ground-truth reward models, collisions, gaps and seeded random streams."""
from __future__ import annotations

import itertools
import zlib
from dataclasses import dataclass, field

import numpy as np

from .kernels import KIND_BERNOULLI, KIND_UNIFORM, NO_ACTION

FAMILIES = {"bernoulli": KIND_BERNOULLI, "uniform": KIND_UNIFORM}
MAX_ENUM_ARMS = 8
GAP_TOL = 1e-12


@dataclass(frozen=True)
class ArmModel:
    """A reward distribution supported on [0, 1].

    ``uniform`` is the widest uniform law inside [0, 1] with the given mean.
    """

    mean: float
    kind: str = "bernoulli"

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ValueError(f"unknown reward family {self.kind!r}; expected one of {sorted(FAMILIES)}")
        if not 0.0 <= self.mean <= 1.0:
            raise ValueError(f"arm mean {self.mean} outside [0, 1]")

    @property
    def code(self) -> int:
        return FAMILIES[self.kind]

    def from_uniform(self, u):
        """Inverse-CDF transform of uniform draws on [0, 1)."""
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "bernoulli":
            return (u < self.mean).astype(np.float64)
        half = min(self.mean, 1.0 - self.mean)
        return self.mean - half + 2.0 * half * u


@dataclass(frozen=True)
class RngStream:
    """Independent random stream addressed by ``(seed, purpose, player, replication)``."""

    seed: int
    purpose: str
    player: int = 0
    replication: int = 0

    @property
    def key(self) -> tuple[int, int, int]:
        return (zlib.crc32(self.purpose.encode()), int(self.player), int(self.replication))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed) & (2**64 - 1), spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(ss))


def stream(seed: int, purpose: str, player: int = 0, replication: int = 0) -> np.random.Generator:
    return RngStream(seed, purpose, player, replication).generator()


def sample_reward(model: ArmModel, rng: np.random.Generator, size=None):
    """Draw i.i.d. rewards from ``model``; a scalar when ``size`` is None."""
    out = model.from_uniform(rng.random(size))
    return float(out) if size is None else out


@dataclass
class BanditInstance:
    """True means: shape ``(N,)`` for one player, ``(M, N)`` for a team."""

    means: np.ndarray
    family: str = "bernoulli"

    def __post_init__(self):
        self.means = np.array(self.means, dtype=np.float64)
        if self.means.ndim not in (1, 2):
            raise ValueError("means must be a vector (single) or a matrix (multi)")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown reward family {self.family!r}")
        if np.any(self.means < 0.0) or np.any(self.means > 1.0):
            raise ValueError("all arm means must lie in [0, 1]")
        if self.n_arms < 2:
            raise ValueError("need at least two arms")
        if self.n_arms > 127:
            raise ValueError("at most 127 arms are supported")
        if self.is_multi and self.n_players > self.n_arms:
            raise ValueError(f"multiplayer instance needs M <= N, got M={self.n_players}, N={self.n_arms}")

    @property
    def is_multi(self) -> bool:
        return self.means.ndim == 2

    @property
    def mode(self) -> str:
        return "multi" if self.is_multi else "single"

    @property
    def n_arms(self) -> int:
        return self.means.shape[-1]

    @property
    def n_players(self) -> int:
        return self.means.shape[0] if self.is_multi else 1

    def arm(self, j: int, player: int = 0) -> ArmModel:
        mu = self.means[player, j] if self.is_multi else self.means[j]
        return ArmModel(float(mu), self.family)

    @property
    def kind_code(self) -> int:
        return FAMILIES[self.family]

    def rewards_from_uniform(self, arms, u, player: int = 0):
        """Vectorized reward draws for a sequence of arm choices."""
        arms = np.asarray(arms)
        row = self.means[player] if self.is_multi else self.means
        mu = row[arms]
        u = np.asarray(u, dtype=np.float64)
        if self.family == "bernoulli":
            return (u < mu).astype(np.float64)
        half = np.minimum(mu, 1.0 - mu)
        return mu - half + 2.0 * half * u


def resolve_collisions(actions, drawn):
    """Zero the rewards of players sharing an arm, and of players taking no action.

    Works on one slot (1-d inputs) or a batch of slots (``(T, M)`` inputs).
    """
    actions = np.asarray(actions)
    drawn = np.asarray(drawn, dtype=np.float64)
    if actions.shape != drawn.shape:
        raise ValueError("actions and drawn rewards must have the same shape")
    squeeze = actions.ndim == 1
    a = np.atleast_2d(actions)
    active = a != NO_ACTION
    same = (a[:, :, None] == a[:, None, :]) & active[:, :, None]
    m = a.shape[1]
    same[:, np.arange(m), np.arange(m)] = False
    ok = active & ~same.any(axis=2)
    out = np.where(ok, np.atleast_2d(drawn), 0.0)
    return out[0] if squeeze else out


@dataclass
class GapSummary:
    mode: str
    mu_star: float
    delta_min: float
    delta_max: float
    # single: per-arm gaps (best arm(s) at 0); multi: per-assignment gaps
    gaps: np.ndarray
    best_arm: int | None = None
    assignments: np.ndarray | None = None
    optimal: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def suboptimal_gaps(self) -> np.ndarray:
        return self.gaps[self.gaps > GAP_TOL]

    def is_optimal(self, assignment) -> bool:
        return tuple(int(x) for x in assignment) in set(self.optimal)


def injective_assignments(n_players: int, n_arms: int) -> np.ndarray:
    """All injective maps players -> arms, lexicographic order, shape ``(K, M)``."""
    return np.array(list(itertools.permutations(range(n_arms), n_players)), dtype=np.int64)


def _finish(gaps, require_strict):
    sub = gaps[gaps > GAP_TOL]
    if sub.size == 0:
        if require_strict:
            raise ValueError("instance has no strictly suboptimal choice (delta_min = 0)")
        return float("nan"), 0.0
    return float(sub.min()), float(gaps.max())


def gap_summary(instance: BanditInstance, require_strict: bool = False) -> GapSummary:
    """Gaps against the best arm, or against the best matching for a team."""
    if not instance.is_multi:
        mu = instance.means
        best = int(np.argmax(mu))
        gaps = mu[best] - mu
        gaps[np.abs(gaps) <= GAP_TOL] = 0.0
        dmin, dmax = _finish(gaps, require_strict)
        optimal = [(j,) for j in np.flatnonzero(gaps == 0.0)]
        return GapSummary("single", float(mu[best]), dmin, dmax, gaps, best_arm=best, optimal=optimal)

    m, n = instance.means.shape
    if n > MAX_ENUM_ARMS:
        raise ValueError(f"exhaustive gap enumeration limited to N <= {MAX_ENUM_ARMS}, got N={n}")
    ks = injective_assignments(m, n)
    totals = instance.means[np.arange(m), ks].sum(axis=1)
    mu_star = float(totals.max())
    gaps = mu_star - totals
    gaps[np.abs(gaps) <= GAP_TOL] = 0.0
    dmin, dmax = _finish(gaps, require_strict)
    optimal = [tuple(int(x) for x in k) for k in ks[gaps == 0.0]]
    return GapSummary("multi", mu_star, dmin, dmax, gaps, assignments=ks, optimal=optimal)
