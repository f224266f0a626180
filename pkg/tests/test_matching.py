import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from e3bandit.matching import (
    AuctionError,
    Matching,
    auction_run,
    brute_force,
    comm_slots,
    iteration_bound,
    preferred_and_bid,
    quantize,
)
from conftest import TEAM_MATRIX


@pytest.mark.parametrize(
    "row,prices,eps,arm,bid",
    [([1, 0], [0, 0], 0.1, 0, 1.05), ([0.5, 0.5], [0, 0], 0.2, 0, 0.1), ([0.9, 0.8], [0.5, 0], 0.1, 1, 0.45)],
)
def test_preferred_and_bid(row, prices, eps, arm, bid):
    b = preferred_and_bid(row, prices, eps, 2)
    assert b.arm == arm and b.amount == pytest.approx(bid)


def test_single_arm_bid_uses_zero_second_value():
    assert preferred_and_bid([0.7], [0.2], 0.1, 1).amount == pytest.approx(0.6)


def test_identity_matrix():
    m, trace = auction_run([[1, 0], [0, 1]], 0.2)
    assert m.arms == (0, 1) and m.surplus([[1, 0], [0, 1]]) == 2.0
    assert trace.iterations <= trace.iteration_bound


def test_lone_bidder_takes_argmax():
    for eps in (0.5, 0.01):
        assert auction_run([[0.3, 0.7, 0.5]], eps)[0].arms == (1,)


def test_team_matrix_is_near_optimal():
    m, trace = auction_run(TEAM_MATRIX, 0.001)
    assert m.complete and m.surplus(TEAM_MATRIX) >= 1.6 - 0.001
    assert trace.iterations <= trace.iteration_bound == 8100


def test_trace_is_deterministic_and_consistent():
    v = np.random.default_rng(1).random((4, 6))
    m1, t1 = auction_run(v, 0.01)
    m2, t2 = auction_run(v, 0.01)
    assert m1 == m2 and np.array_equal(t1.bid_amounts, t2.bid_amounts)
    assert np.array_equal(t1.price_history[-1], t1.prices)
    assert np.all(np.diff(t1.price_history, axis=0) >= 0)
    assert all(b.amount >= 0.01 / 4 - 1e-15 for k in range(t1.iterations) for b in t1.bids(k))


def test_brute_force():
    assert brute_force([[1, 0], [0, 1]]) == (Matching((0, 1)), 2.0)
    assert brute_force(np.full((3, 4), 0.4)) == (Matching((0, 1, 2)), pytest.approx(1.2))
    best, total = brute_force(TEAM_MATRIX)
    assert best.arms == (0, 1, 2) and total == pytest.approx(1.6)


def test_matching_must_be_injective():
    with pytest.raises(ValueError):
        Matching((1, 1))
    assert not Matching((0, -1)).complete


@pytest.mark.parametrize("values", [[[0.5, 0.5]] * 3, [[1.5, 0.0], [0.0, 0.1]]])
def test_bad_value_matrices(values):
    with pytest.raises(ValueError):
        auction_run(values, 0.1)


def test_flat_matrix_needs_one_round_per_player():
    m, trace = auction_run(np.zeros((3, 3)), 1.0)
    assert m.complete and trace.iterations == 3 == iteration_bound(np.zeros((3, 3)), 1.0)


def test_bound_violation_is_reported(monkeypatch):
    import e3bandit.matching as mod

    monkeypatch.setattr(mod, "iteration_bound", lambda v, e: 1)
    with pytest.raises(AuctionError, match="guarantee"):
        mod.auction_run(TEAM_MATRIX, 0.001)


def test_quantize():
    assert quantize(0.777, 0.01) == pytest.approx(0.77)
    assert quantize(0.5, 0.5) == 0.5
    assert quantize(0.3, 0.1) == pytest.approx(0.3)
    assert quantize(0.7, 0.001) == pytest.approx(0.7)
    with pytest.raises(ValueError):
        quantize(0.5, 0)


@given(st.integers(1, 1000), st.sampled_from([0.5, 0.1, 0.01, 0.001]))
def test_quantize_fixed_points(k, step):
    x = k * step
    assert quantize(x, step) == pytest.approx(x, abs=1e-12)


def test_comm_cost():
    c = comm_slots(3, 3, 0.001, 10)
    assert c.slots == 30 and c.bid_bits == 10 and c.preference_bits == 2
    assert comm_slots(1, 4, 0.01, 5).slots == 0
    assert comm_slots(2, 2, 0.5, 1).bid_bits == 1


@settings(max_examples=150, deadline=None)
@given(
    st.integers(1, 4).flatmap(
        lambda m: st.integers(m, 6).flatmap(
            lambda n: hnp.arrays(np.float64, (m, n), elements=st.floats(0, 1, allow_subnormal=False))
        )
    ),
    st.sampled_from([0.2, 0.05, 0.01]),
)
def test_auction_is_eps_optimal_and_within_bound(values, eps):
    m, trace = auction_run(values, eps)
    _, opt = brute_force(values)
    assert m.complete
    assert m.surplus(values) >= opt - eps - 1e-12
    assert trace.iterations <= trace.iteration_bound
