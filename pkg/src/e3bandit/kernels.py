"""Hot inner loops.

Every kernel exists twice: ``<name>_py`` (plain numpy, interpreted) and
``<name>_jit`` (numba).  The unsuffixed name is the one the rest of the
package calls and is bound according to :mod:`e3bandit._accel`.  Both
variants consume the same pre-drawn uniforms, so their outputs are identical
for identical inputs.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

KIND_BERNOULLI = 0
KIND_UNIFORM = 1

NO_ACTION = -1
DEFICIT_TOL = 1e-9


def _ucb1_loop(means, kinds, uniforms, horizon):
    n_arms = means.shape[0]
    counts = np.zeros(n_arms, dtype=np.int64)
    sums = np.zeros(n_arms, dtype=np.float64)
    actions = np.empty(horizon, dtype=np.int8)
    for t in range(horizon):
        if t < n_arms:
            arm = t
        else:
            log_t = np.log(t + 1.0)
            arm = 0
            best = -np.inf
            for j in range(n_arms):
                index = sums[j] / counts[j] + np.sqrt(2.0 * log_t / counts[j])
                if index > best:
                    best = index
                    arm = j
        mu = means[arm]
        u = uniforms[t]
        if kinds[arm] == KIND_BERNOULLI:
            reward = 1.0 if u < mu else 0.0
        else:
            half = min(mu, 1.0 - mu)
            reward = mu - half + 2.0 * half * u
        counts[arm] += 1
        sums[arm] += reward
        actions[t] = arm
    return actions, counts, sums


def _auction(values, eps, max_rounds):
    # Simultaneous-bid forward auction.  Returns the assignment, final prices,
    # round count, per-round bid records and price history, and a status flag
    # (0 converged, 1 hit max_rounds).
    n_players, n_arms = values.shape
    prices = np.zeros(n_arms, dtype=np.float64)
    owner = np.full(n_arms, -1, dtype=np.int64)
    assigned = np.full(n_players, -1, dtype=np.int64)
    increment = eps / n_players

    cap = 16
    bid_arms = np.full((cap, n_players), -1, dtype=np.int64)
    bid_amounts = np.zeros((cap, n_players), dtype=np.float64)
    price_hist = np.zeros((cap, n_arms), dtype=np.float64)

    top_bid = np.empty(n_arms, dtype=np.float64)
    top_bidder = np.empty(n_arms, dtype=np.int64)

    rounds = 0
    status = 0
    while True:
        n_free = 0
        for i in range(n_players):
            if assigned[i] < 0:
                n_free += 1
        if n_free == 0:
            break
        if rounds >= max_rounds:
            status = 1
            break
        if rounds == cap:
            new_cap = cap * 2
            grown_arms = np.full((new_cap, n_players), -1, dtype=np.int64)
            grown_amounts = np.zeros((new_cap, n_players), dtype=np.float64)
            grown_prices = np.zeros((new_cap, n_arms), dtype=np.float64)
            grown_arms[:cap] = bid_arms
            grown_amounts[:cap] = bid_amounts
            grown_prices[:cap] = price_hist
            bid_arms = grown_arms
            bid_amounts = grown_amounts
            price_hist = grown_prices
            cap = new_cap

        top_bid[:] = -1.0
        top_bidder[:] = -1
        for i in range(n_players):
            if assigned[i] >= 0:
                continue
            best_arm = 0
            first = -np.inf
            second = -np.inf
            for j in range(n_arms):
                net = values[i, j] - prices[j]
                if net > first:
                    second = first
                    first = net
                    best_arm = j
                elif net > second:
                    second = net
            if n_arms == 1:
                second = 0.0
            bid = first - second + increment
            bid_arms[rounds, i] = best_arm
            bid_amounts[rounds, i] = bid
            if bid > top_bid[best_arm]:
                top_bid[best_arm] = bid
                top_bidder[best_arm] = i

        for j in range(n_arms):
            winner = top_bidder[j]
            if winner < 0:
                continue
            prices[j] += top_bid[j]
            previous = owner[j]
            if previous >= 0:
                assigned[previous] = -1
            owner[j] = winner
            assigned[winner] = j
        price_hist[rounds] = prices
        rounds += 1

    return (
        assigned,
        prices,
        rounds,
        bid_arms[:rounds].copy(),
        bid_amounts[:rounds].copy(),
        price_hist[:rounds].copy(),
        status,
    )


def _slot_deficits_loop(actions, means, best_total):
    horizon, n_players = actions.shape
    deficit = np.empty(horizon, dtype=np.float64)
    collided = np.zeros(horizon, dtype=np.int64)
    for t in range(horizon):
        earned = 0.0
        for i in range(n_players):
            a = actions[t, i]
            if a < 0:
                continue
            clash = False
            for k in range(n_players):
                if k != i and actions[t, k] == a:
                    clash = True
                    break
            if clash:
                collided[t] += 1
            else:
                earned += means[i, a]
        d = best_total - earned
        # optimal slots must read exactly zero whatever the summation order
        deficit[t] = 0.0 if abs(d) < DEFICIT_TOL else d
    return deficit, collided


def _slot_deficits_vectorized(actions, means, best_total):
    actions = np.asarray(actions)
    horizon, n_players = actions.shape
    active = actions >= 0
    same = (actions[:, :, None] == actions[:, None, :]) & active[:, :, None]
    same[:, np.arange(n_players), np.arange(n_players)] = False
    clash = same.any(axis=2)
    safe = np.where(active, actions, 0)
    earned = np.where(active & ~clash, means[np.arange(n_players), safe], 0.0).sum(axis=1)
    d = best_total - earned
    d[np.abs(d) < DEFICIT_TOL] = 0.0
    return d, clash.sum(axis=1).astype(np.int64)


ucb1_loop_py = _ucb1_loop
auction_py = _auction
slot_deficits_py = _slot_deficits_vectorized

ucb1_loop_jit = njit(_ucb1_loop)
auction_jit = njit(_auction)
slot_deficits_jit = njit(_slot_deficits_loop)

if USE_NUMBA:
    ucb1_loop = ucb1_loop_jit
    auction = auction_jit
    slot_deficits = slot_deficits_jit
else:
    ucb1_loop = ucb1_loop_py
    auction = auction_py
    slot_deficits = slot_deficits_py
