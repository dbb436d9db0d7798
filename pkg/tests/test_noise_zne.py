import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_table
from qport.classical import greedy
from qport.ising import basis_energies, qubo_to_ising
from qport.noise_zne import (
    NoiseConfig,
    ZeroNoiseExtrapolator,
    ZneEstimate,
    bootstrap_ci,
    effective_error,
    extrapolate,
    extrapolate_linear,
    extrapolate_quadratic,
    extrapolate_richardson,
    noisy_run,
    richardson,
    richardson_weights,
    zne_estimate,
)
from qport.qaoa import QaoaParams, ShotRecord, record_energies, run_qaoa, sample_shots
from qport.qubo import DEFAULT_WEIGHTS, build_qubo

finite = st.floats(-1e3, 1e3, allow_nan=False)


@pytest.fixture(scope="module")
def small_problem():
    t = random_table(8, 21)
    m = qubo_to_ising(build_qubo(t, DEFAULT_WEIGHTS, k=3))
    x0 = greedy(t, DEFAULT_WEIGHTS, 3).portfolio
    return m, QaoaParams(0.6, 1.4), x0, basis_energies(m)


def test_effective_error_examples():
    assert effective_error(0.013, 1) == pytest.approx(0.013, abs=1e-15)
    assert effective_error(0.0, 2.5) == 0.0
    assert effective_error(0.01, 3) == pytest.approx(0.029701, abs=1e-12)
    with pytest.raises(ValueError):
        effective_error(1.0, 1)
    with pytest.raises(ValueError):
        effective_error(0.01, 0.5)
    with pytest.raises(ValueError):
        NoiseConfig(two_qubit_error=-0.1)
    with pytest.raises(ValueError, match="rounds to 1"):
        NoiseConfig(two_qubit_error=0.999, fold_factor=1e4)


@settings(max_examples=200)
@given(st.floats(1e-6, 0.5), st.floats(1, 20), st.floats(0.01, 5))
def test_effective_error_monotone(q, lam, step):
    a, b = effective_error(q, lam), effective_error(q, lam + step)
    assert 0 <= a < b < 1
    # composition: applying the lam-fold channel twice equals the 2*lam-fold channel
    assert 1 - (1 - a) ** 2 == pytest.approx(effective_error(q, 2 * lam), rel=1e-9)


def test_zero_noise_matches_sampler(small_problem):
    m, params, x0, energies = small_problem
    state = run_qaoa(m, params, x0, energies)
    rec = noisy_run(m, params, x0, NoiseConfig(0.0, 1.0, seed=13), 4096, energies)
    assert rec.counts == sample_shots(state, 4096, 13).counts
    assert rec.meta["error_trajectories"] == 0


def test_noisy_run_deterministic(small_problem):
    m, params, x0, energies = small_problem
    cfg = NoiseConfig(0.05, 2.0, seed=4)
    a = noisy_run(m, params, x0, cfg, 2000, energies)
    b = noisy_run(m, params, x0, cfg, 2000, energies)
    assert a == b
    assert a.noise_scale == 2.0 and a.meta["p_eff"] == pytest.approx(effective_error(0.05, 2))
    assert sum(a.counts.values()) == 2000


def test_noisy_cost_mode_runs(small_problem):
    m, params, x0, energies = small_problem
    rec = noisy_run(m, params, x0, NoiseConfig(0.05, 1.0, 2, noisy_cost=True), 1000, energies)
    clean = noisy_run(m, params, x0, NoiseConfig(0.05, 1.0, 2), 1000, energies)
    assert rec.meta["error_trajectories"] > clean.meta["error_trajectories"]


def test_amplified_noise_moves_toward_mixed(small_problem):
    m, params, x0, energies = small_problem
    ideal = float(np.abs(run_qaoa(m, params, x0, energies)) ** 2 @ energies)
    e1, e3 = [], []
    for rep in range(50):
        for lam, acc in ((1.0, e1), (3.0, e3)):
            rec = noisy_run(m, params, x0, NoiseConfig(0.02, lam, 100 * rep + int(lam)), 1000,
                            energies)
            acc.append(record_energies(rec, energies))
    mixed = m.offset
    assert abs(np.mean(e3) - mixed) < abs(np.mean(e1) - mixed)
    assert abs(np.mean(e1) - ideal) < abs(np.mean(e3) - ideal)


def test_linear_examples():
    e0, r2 = extrapolate_linear([(1, 10), (2, 8), (3, 6)])
    assert e0 == pytest.approx(12) and r2 == pytest.approx(1)
    e0, r2 = extrapolate_linear([(1, 4.5), (2, 4.5), (3, 4.5)])
    assert e0 == pytest.approx(4.5) and math.isnan(r2)
    with pytest.raises(ValueError):
        extrapolate_linear([(1, 1), (1, 2)])


def test_quadratic_examples():
    assert extrapolate_quadratic([(1, 6), (2, 11), (3, 18)]) == pytest.approx(3)
    assert extrapolate_quadratic([(1, 7), (2, 7), (3, 7)]) == pytest.approx(7)
    with pytest.raises(ValueError):
        extrapolate_quadratic([(1, 6), (2, 11)])
    # more than three points: least squares
    pts = [(lam, 3 + 2 * lam + lam ** 2) for lam in (1, 1.5, 2, 3)]
    assert extrapolate_quadratic(pts) == pytest.approx(3)


def test_richardson_examples():
    assert richardson(2.5, 2.5, 2.5) == 2.5
    assert richardson(10, 8, 6) == 12
    assert np.allclose(richardson_weights([1, 2, 3]), [3, -3, 1])
    with pytest.raises(ValueError):
        extrapolate_richardson([(1, 1), (2, 2), (3, 3), (4, 4)])
    with pytest.raises(ValueError):
        extrapolate([(1, 1), (2, 2), (3, 3)], "cubic")


@settings(max_examples=300)
@given(finite, finite, finite)
def test_quadratic_equals_richardson(e1, e2, e3):
    pts = [(1, e1), (2, e2), (3, e3)]
    assert abs(extrapolate_quadratic(pts) - richardson(e1, e2, e3)) < 1e-9
    assert abs(extrapolate_richardson(pts) - richardson(e1, e2, e3)) < 1e-9


@settings(max_examples=100)
@given(st.lists(st.floats(1, 10), min_size=3, max_size=3, unique=True), finite)
def test_general_lambdas_interpolate(lams, c):
    assume_gap = min(abs(a - b) for a in lams for b in lams if a != b)
    if assume_gap < 0.05:
        return
    f = lambda x: c + 0.3 * x - 0.1 * x * x  # noqa: E731
    pts = [(lam, f(lam)) for lam in lams]
    assert extrapolate_richardson(pts) == pytest.approx(c, abs=1e-6 * (1 + abs(c)))


@settings(max_examples=100)
@given(finite)
def test_fixed_point(c):
    pts = [(1, c), (2, c), (3, c)]
    for method in ("linear", "quadratic", "richardson"):
        assert extrapolate(pts, method) == pytest.approx(c, abs=1e-9)


@pytest.mark.parametrize("amp", np.linspace(0.1, 5, 8))
@pytest.mark.parametrize("rate", np.linspace(0.01, 0.5, 8))
def test_exponential_decay_recovery(amp, rate):
    model = lambda lam: 2.0 + amp * math.exp(-rate * lam)  # noqa: E731
    e1, e2, e3 = model(1), model(2), model(3)
    assert abs(richardson(e1, e2, e3) - model(0)) < abs(e1 - model(0))


def delta_record(bitstring, shots, lam):
    return ShotRecord({bitstring: shots}, shots, float(lam), 0)


def test_bootstrap_degenerate():
    recs = [delta_record("01", 500, lam) for lam in (1, 2, 3)]
    vals = {"01": 4.0}
    for method in ("linear", "quadratic", "richardson"):
        lo, hi = bootstrap_ci(recs, method, 100, 42, vals.__getitem__)
        assert lo == hi == pytest.approx(4.0)


def test_bootstrap_deterministic_and_errors():
    rng = np.random.default_rng(0)
    recs = []
    for lam in (1, 2, 3):
        draws = rng.multinomial(1000, [0.5, 0.3, 0.2])
        recs.append(ShotRecord({b: int(c) for b, c in zip(("00", "01", "10"), draws)}, 1000, lam))
    score = {"00": 1.0, "01": 2.0, "10": -1.0}.__getitem__
    assert bootstrap_ci(recs, "quadratic", 100, 42, score) == bootstrap_ci(recs, "quadratic", 100,
                                                                          42, score)
    assert bootstrap_ci(recs, "quadratic", 100, 42, score) != bootstrap_ci(recs, "quadratic", 100,
                                                                          43, score)
    with pytest.raises(ValueError):
        bootstrap_ci([], "linear", 100, 42, score)
    with pytest.raises(ValueError):
        bootstrap_ci([ShotRecord({}, 0, 1.0)], "linear", 100, 42, score)


def test_bootstrap_post_selection():
    recs = [ShotRecord({"11": 50, "01": 50}, 100, lam) for lam in (1, 2, 3)]
    score = {"11": 3.0, "01": float("nan")}.__getitem__
    lo, hi = bootstrap_ci(recs, "linear", 50, 1, score)
    assert lo == hi == pytest.approx(3.0)


def test_bootstrap_coverage():
    values = np.array([0.0, 1.0, 2.0, 5.0])
    keys = ["00", "01", "10", "11"]
    probs = {1: [0.4, 0.3, 0.2, 0.1], 2: [0.45, 0.3, 0.15, 0.1], 3: [0.5, 0.3, 0.15, 0.05]}
    means = {lam: float(np.dot(p, values)) for lam, p in probs.items()}
    truth = richardson(means[1], means[2], means[3])
    score = dict(zip(keys, values)).__getitem__
    rng = np.random.default_rng(2024)
    covered = 0
    for rep in range(100):
        recs = []
        for lam, p in probs.items():
            draws = rng.multinomial(4000, p)
            recs.append(ShotRecord({k: int(c) for k, c in zip(keys, draws) if c}, 4000, lam))
        lo, hi = bootstrap_ci(recs, "richardson", 100, rep, score)
        covered += lo <= truth <= hi
    assert covered >= 90


def test_zne_estimate_and_serialization():
    est = zne_estimate([1, 2, 3], [10, 8, 6])
    assert est.linear_e0 == pytest.approx(12)
    assert est.quadratic_e0 == pytest.approx(12) and est.richardson_e0 == pytest.approx(12)
    assert est.quadratic_r2 is None
    d = est.to_dict()
    assert d["quadratic"]["r2"] is None and d["linear"]["r2"] == pytest.approx(1)
    two = zne_estimate([1, 2], [3, 2])
    assert two.quadratic_e0 is None and two.richardson_e0 is None
    flat = zne_estimate([1, 2, 3], [5, 5, 5]).to_dict()
    assert flat["linear"]["r2"] is None
    with pytest.raises(ValueError):
        ZneEstimate([1], [1], 1.0, 1.0)


def test_zne_estimate_with_records():
    recs = [ShotRecord({"0": 60, "1": 40}, 100, lam, seed=lam) for lam in (1, 2, 3)]
    est = zne_estimate([1, 2, 3], [0.4, 0.4, 0.4], recs, {"0": 0.0, "1": 1.0}.__getitem__, b=20)
    assert set(est.bootstrap_ci) == {"linear", "quadratic", "richardson"}
    assert est.record_seeds == [1, 2, 3]
    assert est.to_dict()["bootstrap"]["resamples"] == 20


def test_extrapolator_estimator():
    lam = np.array([1.0, 2.0, 3.0])
    y = 3 + 2 * lam + lam ** 2
    quad = ZeroNoiseExtrapolator("quadratic").fit(lam, y)
    assert quad.zero_noise_value_ == pytest.approx(3)
    assert np.allclose(quad.predict([0, 4]), [3, 27])
    lin = ZeroNoiseExtrapolator("linear").fit(lam, [10, 8, 6])
    assert lin.r2_ == pytest.approx(1) and lin.score(lam, [10, 8, 6]) == pytest.approx(1)
    assert ZeroNoiseExtrapolator("richardson").fit(lam, [10, 8, 6]).zero_noise_value_ == 12
    with pytest.raises(ValueError):
        ZeroNoiseExtrapolator("spline").fit(lam, y)
