import numpy as np
import pytest

from e3bandit.env import BanditInstance, gap_summary
from e3bandit.policy_multi import (
    CostModel,
    EpsilonSchedule,
    MultiEpochClock,
    PlayerState,
    de3_act,
    epsilon_decay,
    gamma_beta_multi,
    gamma_multi,
    multi_horizon,
    run_de3,
    run_de3ts,
    run_epoch_matching,
    staggered_arms,
)
from e3bandit.policy_single import EXPLOIT, GammaSchedule, gamma_known
from conftest import TEAM_MATRIX


def test_gamma_multi():
    assert gamma_multi(3, 0.15, 0.001) == 845
    assert gamma_beta_multi(3, 0.15, 0.001) == 3378
    assert gamma_multi(1, 0.1, 1e-12) == gamma_known(0.1) == 200


@pytest.mark.parametrize("fn", [gamma_multi, gamma_beta_multi])
def test_gamma_multi_rejects_boundary(fn):
    with pytest.raises(ValueError, match=r"delta_lb/\(M\+1\)"):
        fn(3, 0.15, 0.15 / 4)


def test_epsilon_decay():
    assert epsilon_decay(2, 0.5) == 1.0
    assert epsilon_decay(2**16, 0.5) == 0.25
    vals = [epsilon_decay(t, 0.3) for t in (2, 10, 10**3, 10**6, 10**9)]
    assert all(a >= b > 0 for a, b in zip(vals, vals[1:]))


def test_epsilon_schedule():
    assert EpsilonSchedule(eps=0.01).at(10**6) == 0.01
    assert EpsilonSchedule(delta=0.5).at(2**16) == 0.25
    with pytest.raises(ValueError):
        EpsilonSchedule(eps=0.01, delta=0.5)
    with pytest.raises(ValueError):
        EpsilonSchedule(eps=0.05, delta_lb=0.15).check(3)


def test_cost_model():
    assert CostModel("constant", 1.0).unit(0.5) == 1.0
    assert CostModel("inverse_epsilon").unit(0.001) == pytest.approx(1000)
    with pytest.raises(ValueError):
        CostModel("free")
    with pytest.raises(ValueError):
        CostModel("constant", -1)


def test_staggered_exploration_never_collides():
    assert staggered_arms(0, 3, 3).tolist() == [0, 1, 2]
    assert staggered_arms(1, 3, 3).tolist() == [1, 2, 0]
    block = np.stack([staggered_arms(i, 5, 50) for i in range(4)], axis=1)
    assert all(len(set(row)) == 4 for row in block)


def test_exploit_plays_assignment():
    clock = MultiEpochClock(3, 3, GammaSchedule(gamma=1))
    clock.advance(clock.remaining)
    assert clock.phase == EXPLOIT
    p = PlayerState.empty(0, 3)
    p.assignment = 1
    assert all(de3_act(p, clock) == 1 for _ in range(clock.exploit_length))


def test_epoch_matching_on_true_means():
    players = [PlayerState.empty(i, 3) for i in range(3)]
    em = run_epoch_matching(np.array(TEAM_MATRIX), 0.001, CostModel("constant", 1.0), players)
    assert em.matching.surplus(TEAM_MATRIX) >= 1.599
    assert em.cost == 9.0
    assert [p.assignment for p in players] == list(em.matching.arms)


def test_epoch_matching_is_deterministic():
    idx = np.random.default_rng(4).random((3, 4))
    a = run_epoch_matching(idx, 0.01, CostModel())
    b = run_epoch_matching(idx, 0.01, CostModel())
    assert a.matching == b.matching


@pytest.mark.parametrize("accounting,scale", [("sequential", 3), ("staggered", 1)])
def test_multi_boundaries(accounting, scale):
    inst = BanditInstance(TEAM_MATRIX)
    horizon = multi_horizon(3, 3, 10, 8, accounting)
    run = run_de3(inst, horizon, GammaSchedule(gamma=10), EpsilonSchedule(eps=0.001), CostModel("constant", 1.0),
                  accounting=accounting, seed=1)
    ls = np.arange(1, 9)
    assert run.boundaries.tolist() == (scale * 3 * 10 * ls + 2 ** (ls + 1) - 2).tolist()
    assert run.explore_collisions == 0
    assert run.cost_amounts.tolist() == [9.0] * 8


def test_sequential_accounting_learns_from_n_gamma_slots_only():
    inst = BanditInstance(TEAM_MATRIX)
    run = run_de3(inst, multi_horizon(3, 3, 5, 3), GammaSchedule(gamma=5), EpsilonSchedule(eps=0.01), CostModel())
    for p in run.players:
        assert p.counts.tolist() == [15, 15, 15]


def test_de3ts_finds_an_optimal_matching():
    inst = BanditInstance(TEAM_MATRIX)
    gs = gap_summary(inst)
    run = run_de3ts(inst, multi_horizon(3, 3, 400, 12), GammaSchedule(gamma=400), EpsilonSchedule(eps=0.001),
                    CostModel(), seed=5)
    assert gs.is_optimal(run.matchings[-1].matching.arms)


def test_decaying_schedules_run():
    inst = BanditInstance(TEAM_MATRIX)
    run = run_de3(inst, 5000, GammaSchedule(delta=0.5), EpsilonSchedule(delta=0.5), CostModel("inverse_epsilon"))
    assert np.all(np.diff(run.epsilons) <= 0)
    assert run.cost_amounts[0] == pytest.approx(9.0)


def test_single_row_is_rejected():
    with pytest.raises(ValueError):
        run_de3(BanditInstance([0.1, 0.9]), 100, GammaSchedule(gamma=1), EpsilonSchedule(eps=0.01), CostModel())
