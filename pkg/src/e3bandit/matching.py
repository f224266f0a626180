"""Auction-based epsilon-optimal matching of players to arms, plus an exhaustive oracle."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .env import MAX_ENUM_ARMS, injective_assignments


class AuctionError(RuntimeError):
    """The auction exceeded its iteration guarantee."""


@dataclass(frozen=True)
class Bid:
    player: int
    arm: int
    amount: float


@dataclass
class AuctionTrace:
    iterations: int
    bid_arms: np.ndarray  # (iterations, M), -1 where the player did not bid
    bid_amounts: np.ndarray  # (iterations, M)
    price_history: np.ndarray  # (iterations, N), prices after each round
    prices: np.ndarray
    epsilon: float
    iteration_bound: int
    comm: "CommCost | None" = None

    def bids(self, round_index: int) -> list[Bid]:
        arms = self.bid_arms[round_index]
        return [Bid(i, int(a), float(self.bid_amounts[round_index, i])) for i, a in enumerate(arms) if a >= 0]


@dataclass(frozen=True)
class Matching:
    """Arm of each player; ``-1`` marks an unassigned player."""

    arms: tuple[int, ...]

    def __post_init__(self):
        taken = [a for a in self.arms if a >= 0]
        if len(set(taken)) != len(taken):
            raise ValueError(f"matching is not injective: {self.arms}")

    @property
    def complete(self) -> bool:
        return all(a >= 0 for a in self.arms)

    def surplus(self, values) -> float:
        values = np.asarray(values)
        return float(sum(values[i, a] for i, a in enumerate(self.arms) if a >= 0))

    def as_dict(self) -> dict[int, int]:
        return {i: a for i, a in enumerate(self.arms)}


def _as_values(values) -> np.ndarray:
    values = np.array(values, dtype=np.float64, ndmin=2)
    if values.ndim != 2:
        raise ValueError("value matrix must be two-dimensional")
    m, n = values.shape
    if m > n:
        raise ValueError(f"need at most as many players as arms, got M={m}, N={n}")
    if np.any(values < 0.0) or np.any(values > 1.0):
        raise ValueError("value entries must lie in [0, 1]")
    return values


def preferred_and_bid(row, prices, eps: float, n_players: int) -> Bid:
    """Preferred arm and bid increment for one player facing ``prices``."""
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    net = np.asarray(row, dtype=np.float64) - np.asarray(prices, dtype=np.float64)
    best = int(np.argmax(net))
    if net.size == 1:
        second = 0.0
    else:
        second = float(np.max(np.delete(net, best)))
    return Bid(-1, best, float(net[best] - second + eps / n_players))


def iteration_bound(values, eps: float) -> int:
    """Round guarantee ``ceil(M^2 * max value / eps)``, floored at M rounds.

    The floor covers near-flat matrices: when every player prefers the same
    arm, only one of them is placed per round.
    """
    values = np.asarray(values)
    m = values.shape[0]
    return max(m, math.ceil(m * m * float(values.max()) / eps - 1e-9))


def auction_run(values, eps: float, check_bound: bool = True) -> tuple[Matching, AuctionTrace]:
    values = _as_values(values)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    bound = iteration_bound(values, eps)
    # generous hard stop; the guarantee is checked separately below
    hard_stop = 4 * bound + 4 * values.shape[0] + 16
    assigned, prices, rounds, bid_arms, bid_amounts, hist, status = kernels.auction(
        np.ascontiguousarray(values), float(eps), int(hard_stop)
    )
    trace = AuctionTrace(int(rounds), bid_arms, bid_amounts, hist, prices, float(eps), bound)
    if status != 0:
        raise AuctionError(f"auction did not converge within {hard_stop} rounds (eps={eps}, shape={values.shape})")
    if check_bound and trace.iterations > bound:
        raise AuctionError(
            f"auction used {trace.iterations} rounds, above the guarantee of {bound} "
            f"(eps={eps}, shape={values.shape}, max value={values.max():.6g})"
        )
    return Matching(tuple(int(a) for a in assigned)), trace


def brute_force(values) -> tuple[Matching, float]:
    """Exact optimum over all injective assignments; lexicographically smallest on ties."""
    values = _as_values(values)
    m, n = values.shape
    if n > MAX_ENUM_ARMS:
        raise ValueError(f"brute force limited to N <= {MAX_ENUM_ARMS}, got N={n}")
    ks = injective_assignments(m, n)
    totals = values[np.arange(m), ks].sum(axis=1)
    best = int(np.argmax(totals))
    return Matching(tuple(int(a) for a in ks[best])), float(totals[best])


def quantize(x, step: float):
    """Round down to the grid ``k * step``; exact multiples map to themselves."""
    if step <= 0:
        raise ValueError("quantization step must be positive")
    x = np.asarray(x, dtype=np.float64)
    q = np.floor(x / step + 1e-9) * step
    return float(q) if q.ndim == 0 else q


@dataclass(frozen=True)
class CommCost:
    slots: int
    preference_bits: int
    bid_bits: int

    @property
    def message_bits(self) -> int:
        return self.preference_bits + self.bid_bits


def comm_slots(n_players: int, n_arms: int, eps1: float, iterations: int) -> CommCost:
    """Signalling cost of a round-robin auction: one slot per player per round."""
    if not 0.0 < eps1 < 1.0:
        raise ValueError("bid precision must lie in (0, 1)")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    pref = math.ceil(math.log2(n_arms)) if n_arms > 1 else 0
    bid = math.ceil(math.log2(1.0 / eps1) - 1e-12)
    slots = 0 if n_players == 1 else iterations * n_players
    return CommCost(slots, pref, bid)
