"""End-to-end acceptance checks at the stated tolerances and scales.

Each test records the measured numbers; a summary line per criterion is
printed at the end of the pytest run.
"""
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from e3bandit import regret
from e3bandit.env import BanditInstance, gap_summary, stream
from e3bandit.harness.config import configs_from_dict
from e3bandit.harness.experiment import run_experiment
from e3bandit.matching import auction_run, brute_force
from e3bandit.policy_multi import CostModel, EpsilonSchedule, run_de3
from e3bandit.policy_single import GammaSchedule, gamma_beta_known, gamma_known, run_e3
from conftest import FOUR_ARMS, TEAM_MATRIX

RUNS = 10
HORIZON = 2_000_000


def _fig1(policy):
    raw = {"instance": {"means": FOUR_ARMS}, "policy": policy, "horizon": {"slots": HORIZON}, "runs": RUNS,
           "seed": 7, "cost": 0.0, "log_base": "2"}
    return configs_from_dict(raw)[0]


def _fig2(policy):
    raw = {"instance": {"means": TEAM_MATRIX}, "policy": policy, "horizon": {"epochs": 20}, "runs": RUNS,
           "seed": 7, "cost": {"kind": "constant", "value": 1.0}, "log_base": "2"}
    return configs_from_dict(raw)[0]


@pytest.fixture(scope="module")
def fig1_results():
    out, elapsed = {}, {}
    for name, policy in (("e3", {"name": "e3", "gamma": 200}), ("e3ts", {"name": "e3ts", "gamma": 800}),
                         ("ucb1", {"name": "ucb1"})):
        t0 = time.perf_counter()
        out[name] = run_experiment(_fig1(policy))
        elapsed[name] = time.perf_counter() - t0
    return out, elapsed


@pytest.fixture(scope="module")
def fig2_results():
    out, elapsed = {}, {}
    for name, gamma in (("de3", 100), ("de3ts", 400)):
        t0 = time.perf_counter()
        out[name] = run_experiment(_fig2({"name": name, "gamma": gamma, "epsilon": 0.001}))
        elapsed[name] = time.perf_counter() - t0
    return out, elapsed


def test_criterion_01_auction_eps_optimality(record_property):
    rng = np.random.default_rng(20240601)
    t0 = time.perf_counter()
    worst_gap, over_bound, below_opt = -math.inf, 0, 0
    for _ in range(1000):
        m = int(rng.integers(2, 6))
        n = int(rng.integers(m, 7))
        values = rng.random((m, n))
        _, opt = brute_force(values)
        for eps in (0.1, 0.01):
            matching, trace = auction_run(values, eps, check_bound=False)
            shortfall = opt - matching.surplus(values)
            worst_gap = max(worst_gap, shortfall / eps)
            below_opt += shortfall > eps
            over_bound += trace.iterations > math.ceil(m * m * values.max() / eps)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"shortfall<=eps in all 2000 ({worst_gap:.3f} eps worst), bound exceeded "
                              f"{over_bound} times, {elapsed:.1f}s")
    assert below_opt == 0 and over_bound == 0
    assert elapsed < 30


def _lemma_check(freqs, scale, reps):
    worst = 0.0
    for l in range(1, freqs.shape[0] + 1):
        p = scale * math.exp(-l)
        limit = p + 3 * math.sqrt(p / reps) + 1e-3
        worst = max(worst, float(freqs[l - 1].max() / limit))
    return worst


def test_criterion_02_sample_mean_tail(record_property):
    gamma = gamma_known(0.3)
    assert gamma == 23
    t0 = time.perf_counter()
    freqs = regret.sample_mean_inversions(FOUR_ARMS, gamma, 6, 10**4, stream(2, "lemma-mean"))
    elapsed = time.perf_counter() - t0
    ratio = _lemma_check(freqs, 2.0, 10**4)
    record_property("detail", f"gamma={gamma}, worst frequency/limit {ratio:.3f}, {elapsed:.1f}s")
    assert ratio <= 1.0 and elapsed < 120


def test_criterion_03_posterior_sample_tail(record_property):
    gamma = gamma_beta_known(0.3)
    assert gamma == 89
    t0 = time.perf_counter()
    freqs = regret.thompson_inversions(FOUR_ARMS, gamma, 6, 10**4, stream(3, "lemma-beta"))
    elapsed = time.perf_counter() - t0
    ratio = _lemma_check(freqs, 4.0, 10**4)
    record_property("detail", f"gamma={gamma}, worst frequency/limit {ratio:.3f}, {elapsed:.1f}s")
    assert ratio <= 1.0 and elapsed < 120


def test_criterion_04_phased_bound_domination(fig1_results, record_property):
    res, elapsed = fig1_results
    gs = gap_summary(BanditInstance(FOUR_ARMS))
    parts, ok = [], True
    for name, gamma, fn in (("e3", 200, regret.bound_e3), ("e3ts", 800, regret.bound_e3ts)):
        r = res[name]
        keep = r.grid >= 100
        spec = regret.BoundSpec(n_arms=4, delta_max=gs.delta_max, gamma=gamma, cost=0.0, log_base=2.0)
        bound = fn(r.grid[keep], spec)
        ratio = float(np.max(r.mean_total[keep] / bound))
        ok &= bool(np.all(r.mean_total[keep] <= bound))
        parts.append(f"{name} max regret/bound {ratio:.3f}")
    total = elapsed["e3"] + elapsed["e3ts"]
    record_property("detail", ", ".join(parts) + f", {total:.1f}s")
    assert ok and total < 180


def test_criterion_05_ucb1_ordering(fig1_results, record_property):
    res, _ = fig1_results
    final = {k: float(r.mean_total[-1]) for k, r in res.items()}
    gs = gap_summary(BanditInstance(FOUR_ARMS))
    bound = float(regret.bound_ucb1(HORIZON, gs.suboptimal_gaps))
    per_run = [float(led.total[-1]) for led in res["ucb1"].ledgers]
    record_property("detail", f"final means ucb1 {final['ucb1']:.1f}, e3 {final['e3']:.1f}, "
                              f"e3ts {final['e3ts']:.1f}; ucb1 worst run {max(per_run):.1f} vs bound {bound:.1f}")
    assert final["ucb1"] < final["e3"] and final["ucb1"] < final["e3ts"]
    assert all(x <= bound for x in per_run)


def test_criterion_06_team_reproduction(fig2_results, record_property):
    res, elapsed = fig2_results
    r = res["de3ts"]
    collisions = sum(res["de3ts"].explore_collisions) + sum(res["de3"].explore_collisions)
    at = np.searchsorted(r.grid, r.boundaries)
    assert np.array_equal(r.grid[at], r.boundaries) and len(r.boundaries) == 20
    spec = regret.BoundSpec(n_arms=3, n_players=3, delta_max=0.15, gamma=400, cost=1.0, log_base=2.0)
    bound = regret.bound_de3ts(r.boundaries, spec)
    mean = r.mean_total[at]
    comm_ok = all(np.array_equal(led.comm[at], 9.0 * np.arange(1, 21)) for led in r.ledgers)
    total = elapsed["de3"] + elapsed["de3ts"]
    record_property("detail", f"collisions {collisions}, max regret/bound {float(np.max(mean / bound)):.3f}, "
                              f"comm == 9 l: {comm_ok}, {total:.1f}s")
    assert collisions == 0
    assert np.all(mean <= bound)
    assert comm_ok
    assert total < 120


def test_criterion_07_exploitation_regret_stops_growing(fig2_results, record_property):
    r = fig2_results[0]["de3"]
    at = np.searchsorted(r.grid, r.boundaries)
    exploit = r.mean_exploit[at]
    increments = np.diff(exploit)[-10:]  # epochs 11..20
    zero = int(np.sum(increments == 0.0))
    record_property("detail", f"{zero}/10 zero increments over epochs 11-20, largest {increments.max():.4g}")
    assert zero >= 9


def test_criterion_08_beta_binomial_identity(record_property):
    t0 = time.perf_counter()
    worst = max(regret.cdf_identity_residual(a, b, x / 10)
                for a in range(1, 21) for b in range(1, 21) for x in range(1, 10))
    elapsed = time.perf_counter() - t0
    record_property("detail", f"worst residual {worst:.2e}, {elapsed:.2f}s")
    assert worst < 1e-9 and elapsed < 1.0


def _repro(figure, out):
    cmd = [sys.executable, "-m", "e3bandit", "repro", figure, "--seed", "7", "--out", str(out)]
    subprocess.run(cmd, check=True, capture_output=True)
    return {p.name: p.read_bytes() for p in sorted(out.parent.glob("*.csv"))}


def test_criterion_09_determinism(tmp_path, record_property):
    same = {}
    for figure in ("fig1", "fig2"):
        first = _repro(figure, tmp_path / f"{figure}-a" / f"{figure}.csv")
        second = _repro(figure, tmp_path / f"{figure}-b" / f"{figure}.csv")
        same[figure] = bool(first) and first == second
    record_property("detail", ", ".join(f"{k} byte-identical: {v}" for k, v in same.items()))
    assert all(same.values())


def test_criterion_10_epoch_arithmetic(record_property):
    n, gamma = 4, 200
    ls = np.arange(1, 16)
    single_expected = n * gamma * ls + 2 ** (ls + 1) - 2
    horizon = int(single_expected[-1])
    run = run_e3(BanditInstance(FOUR_ARMS), horizon, GammaSchedule(gamma=gamma), seed=1)
    single_ok = run.boundaries.tolist() == single_expected.tolist()

    multi_ok = {}
    m, nm, g = 3, 3, 20
    for accounting, scale in (("sequential", m), ("staggered", 1)):
        expected = scale * nm * g * ls + 2 ** (ls + 1) - 2
        r = run_de3(BanditInstance(TEAM_MATRIX), int(expected[-1]), GammaSchedule(gamma=g),
                    EpsilonSchedule(eps=0.001), CostModel(), accounting=accounting, seed=1)
        multi_ok[accounting] = r.boundaries.tolist() == expected.tolist()
    record_property("detail", f"single {single_ok}, multi sequential {multi_ok['sequential']}, staggered {multi_ok['staggered']}")
    assert single_ok and all(multi_ok.values())
