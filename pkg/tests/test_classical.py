import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_portfolios, random_table
from qport.classical import (
    MAX_ENUMERATION,
    AnnealingSelector,
    ExhaustiveSelector,
    GreedySelector,
    InstanceTooLargeError,
    RandomSearchSelector,
    approximation_ratio,
    enumerate_exact,
    greedy,
    greedy_k_sweep,
    random_search,
    simulated_annealing,
)
from qport.data import synthesize_table
from qport.qubo import DEFAULT_WEIGHTS as W
from qport.qubo import linear_scores, objective_scores

CALIB_OPTIMUM = 3.7648582744919405


def brute_force(table, k):
    X = all_portfolios(table.n, k)
    return objective_scores(table, W, X)


def test_greedy_zero_synergy_is_top_k():
    t = random_table(10, 3, synergy=False)
    res = greedy(t, W, 4)
    top = set(np.argsort(-linear_scores(t, W))[:4])
    assert set(np.flatnonzero(res.portfolio)) == top
    assert res.cardinality == 4


def test_greedy_ties_lowest_index():
    t = random_table(5, 0, synergy=False)
    z = np.zeros((5, 5))
    from qport.data import MunicipalityTable
    flat = MunicipalityTable.from_arrays(t.ids, [0.5] * 5, [0.5] * 5, [0.5] * 5, z, z, z)
    assert list(np.flatnonzero(greedy(flat, W, 2).portfolio)) == [0, 1]


def test_greedy_below_exact():
    for seed in range(5):
        t = random_table(8, seed)
        assert greedy(t, W, 3).score <= enumerate_exact(t, W, 3).score + 1e-12
    with pytest.raises(ValueError):
        greedy(random_table(4, 0), W, 5)


def test_greedy_sweep_nesting():
    t = random_table(12, 1, synergy=False)
    results, nested = greedy_k_sweep(t, W, (2, 4, 6))
    assert nested and [r.cardinality for r in results] == [2, 4, 6]
    _, nested_calib = greedy_k_sweep(synthesize_table(20, 42), W, (3, 5, 7))
    assert isinstance(nested_calib, bool)


def test_enumerate_examples():
    t = random_table(7, 2)
    full = enumerate_exact(t, W, 7)
    assert full.portfolio.sum() == 7
    assert full.score == pytest.approx(objective_scores(t, W, np.ones((1, 7)))[0])
    single = enumerate_exact(t, W, 1)
    assert np.flatnonzero(single.portfolio)[0] == np.argmax(linear_scores(t, W))
    assert enumerate_exact(t, W, 3).score == pytest.approx(brute_force(t, 3).max())


def test_enumerate_calibration_fixture(calib):
    res = enumerate_exact(calib, W, 5)
    assert res.score == pytest.approx(CALIB_OPTIMUM, rel=1e-12)
    assert res.bitstring == "00001000101001001000"
    assert res.evaluations == 15504


def test_enumerate_guard():
    t = synthesize_table(30, 0)
    assert math.comb(30, 15) > MAX_ENUMERATION
    with pytest.raises(InstanceTooLargeError, match="exceeds"):
        enumerate_exact(t, W, 15)


def test_sa_zero_budget_returns_start():
    t = random_table(10, 4)
    res = simulated_annealing(t, W, 4, max_evaluations=0, seed=3)
    rng = np.random.default_rng(3)
    start = np.zeros(10, dtype=np.int8)
    start[rng.choice(10, size=4, replace=False)] = 1
    assert np.array_equal(res.portfolio, start) and res.evaluations == 0


def test_sa_zero_synergy_reaches_top_k():
    t = random_table(12, 5, synergy=False)
    res = simulated_annealing(t, W, 4, max_evaluations=20_000, seed=0)
    assert res.score == pytest.approx(greedy(t, W, 4).score)


def test_sa_small_instance_many_seeds():
    t = random_table(8, 6)
    best = enumerate_exact(t, W, 3).score
    hits = sum(simulated_annealing(t, W, 3, max_evaluations=100_000, seed=s).score >= 0.99 * best
               for s in range(100))
    assert hits >= 95


def test_sa_cold_greedy_start_never_worse():
    for seed in range(5):
        t = random_table(14, seed)
        g = greedy(t, W, 5)
        res = simulated_annealing(t, W, 5, max_evaluations=2000, seed=seed, t0=0.0,
                                  start="greedy")
        assert res.score >= g.score - 1e-12
        res2 = simulated_annealing(t, W, 5, max_evaluations=500, seed=seed, start=g.portfolio)
        assert res2.score >= g.score - 1e-12


def test_sa_determinism_and_budget():
    t = random_table(15, 1)
    a = simulated_annealing(t, W, 5, max_evaluations=3000, seed=9)
    b = simulated_annealing(t, W, 5, max_evaluations=3000, seed=9)
    assert np.array_equal(a.portfolio, b.portfolio) and a.score == b.score
    timed = simulated_annealing(t, W, 5, max_evaluations=None, budget_seconds=0.05, seed=1)
    assert timed.cardinality == 5 and timed.evaluations > 0
    with pytest.raises(ValueError):
        simulated_annealing(t, W, 5, max_evaluations=None, budget_seconds=None)
    with pytest.raises(ValueError):
        simulated_annealing(t, W, 5, start=np.ones(15))


def test_random_search_examples():
    t = random_table(8, 7)
    best, mean, sd = random_search(t, W, 3, iterations=1, seed=0)
    assert best.score == pytest.approx(mean) and sd == 0.0
    iters = math.ceil(56 * math.log(56))
    best, mean, sd = random_search(t, W, 3, iterations=iters, seed=0)
    scores = np.sort(brute_force(t, 3))
    assert best.score >= scores[int(0.95 * len(scores))] - 1e-12
    assert random_search(t, W, 3, 100, 5)[1] == random_search(t, W, 3, 100, 5)[1]


@settings(max_examples=15, deadline=None)
@given(st.integers(4, 10), st.integers(0, 10_000))
def test_hierarchy_and_feasibility(n, seed):
    t = random_table(n, seed)
    k = max(1, n // 2 - 1)
    exact = enumerate_exact(t, W, k)
    g = greedy(t, W, k)
    sa = simulated_annealing(t, W, k, max_evaluations=500, seed=seed)
    rs, _, _ = random_search(t, W, k, 50, seed)
    for res in (exact, g, sa, rs):
        assert res.cardinality == k
    assert exact.score >= g.score - 1e-12
    assert exact.score >= sa.score - 1e-12
    # every random sample is bounded by the optimum (and the best sample by greedy only on average)
    assert exact.score >= rs.score - 1e-12


def test_result_serialization(calib):
    d = greedy(calib, W, 5).to_dict()
    assert d["elapsed_ms"] is None and d["method"] == "greedy"
    assert set(d) >= {"method", "seed", "score", "bitstring", "evaluations", "elapsed_ms"}
    assert greedy(calib, W, 5).to_dict(timing=True)["elapsed_ms"] is not None
    assert approximation_ratio(1.5, 3.0) == 0.5


def test_selectors(calib):
    g = GreedySelector(k=5).fit(calib)
    assert g.predict().sum() == 5 and g.score(calib) == pytest.approx(g.score_)
    sa = AnnealingSelector(k=5, max_evaluations=2000, seed=1).fit(calib)
    assert sa.get_params()["max_evaluations"] == 2000
    rs = RandomSearchSelector(k=5, iterations=100).fit(calib)
    assert rs.mean_ <= rs.score_
    ex = ExhaustiveSelector(k=5).fit(calib)
    assert ex.score_ >= max(g.score_, sa.score_, rs.score_) - 1e-12
    with pytest.raises(Exception):
        GreedySelector().predict()
