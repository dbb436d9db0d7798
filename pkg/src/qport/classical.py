"""Classical baselines: greedy construction, swap-move annealing, random search, enumeration."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_cardinality, check_count
from .qubo import DEFAULT_WEIGHTS, linear_scores, objective_score, pair_weights, to_bitstring

MAX_ENUMERATION = 10**7


class InstanceTooLargeError(ValueError):
    pass


@dataclass
class SolverResult:
    portfolio: np.ndarray
    score: float
    evaluations: int
    elapsed: float
    method: str
    seed: int | None = None
    extras: dict | None = None

    @property
    def cardinality(self):
        return int(self.portfolio.sum())

    @property
    def bitstring(self):
        return to_bitstring(self.portfolio)

    def to_dict(self, timing=False):
        d = {
            "method": self.method,
            "seed": self.seed,
            "score": self.score,
            "bitstring": self.bitstring,
            "selected": [int(i) for i in np.flatnonzero(self.portfolio)],
            "evaluations": self.evaluations,
            "elapsed_ms": round(self.elapsed * 1000, 3) if timing else None,
        }
        if self.extras:
            d.update(self.extras)
        return d


def _selection(n, idx):
    x = np.zeros(n, dtype=np.int8)
    x[list(idx)] = 1
    return x


def approximation_ratio(score, exact_score):
    return score / exact_score


def greedy(table, weights=DEFAULT_WEIGHTS, k=28):
    """Add, k times, the candidate with the largest marginal gain (lowest index on ties)."""
    n = table.n
    k = check_cardinality(k, n, allow_full=True)
    t0 = time.perf_counter()
    lin = linear_scores(table, weights)
    W = pair_weights(table, weights)
    gain = lin.copy()
    chosen = np.zeros(n, dtype=bool)
    evaluations = 0
    for _ in range(k):
        masked = np.where(chosen, -np.inf, gain)
        best = int(np.argmax(masked))
        evaluations += int(n - chosen.sum())
        chosen[best] = True
        gain += W[best]
    x = chosen.astype(np.int8)
    return SolverResult(x, objective_score(table, weights, x), evaluations,
                        time.perf_counter() - t0, "greedy")


def greedy_k_sweep(table, weights=DEFAULT_WEIGHTS, ks=(20, 24, 28, 32, 36)):
    """Greedy at each k; ``nested`` is True when every smaller selection sits inside the next."""
    results = [greedy(table, weights, k) for k in ks]
    ordered = sorted(results, key=lambda r: r.cardinality)
    nested = all(np.all(a.portfolio <= b.portfolio) for a, b in zip(ordered, ordered[1:]))
    return results, nested


def _random_portfolio(rng, n, k):
    return _selection(n, rng.choice(n, size=k, replace=False))


def initial_temperature(table, weights, k, rng, samples=100):
    """Standard deviation of scores over random feasible portfolios."""
    lin = linear_scores(table, weights)
    W = pair_weights(table, weights)
    X = np.array([_random_portfolio(rng, table.n, k) for _ in range(samples)], dtype=float)
    scores = X @ lin + 0.5 * np.einsum("ij,ij->i", X @ W, X)
    return float(scores.std())


def simulated_annealing(table, weights=DEFAULT_WEIGHTS, k=28, max_evaluations=100_000,
                        budget_seconds=None, seed=0, cooling=0.995, t_min=1e-6, t0=None,
                        start=None):
    """Metropolis search over swap moves (one selected out, one unselected in).

    The temperature starts at ``t0`` (default: score std of 100 random feasible
    portfolios) and is multiplied by ``cooling`` after every proposal, never
    dropping below ``t_min``. The run stops after ``max_evaluations`` proposals
    or ``budget_seconds`` of wall time, whichever comes first; only the former
    is deterministic. ``start`` may be a portfolio (e.g. the greedy one) or
    ``"greedy"``; by default a random feasible portfolio is drawn.
    """
    n = table.n
    k = check_cardinality(k, n)
    if max_evaluations is None and budget_seconds is None:
        raise ValueError("give max_evaluations, budget_seconds, or both")
    rng = np.random.default_rng(seed)
    lin = linear_scores(table, weights)
    W = pair_weights(table, weights)

    if start is None:
        x = _random_portfolio(rng, n, k)
    elif isinstance(start, str) and start == "greedy":
        x = greedy(table, weights, k).portfolio.copy()
    else:
        x = np.asarray(start, dtype=np.int8).copy()
        if x.shape != (n,) or int(x.sum()) != k:
            raise ValueError("start portfolio must be feasible")
    temp = initial_temperature(table, weights, k, rng) if t0 is None else float(t0)
    temp = max(temp, t_min)

    t_start = time.perf_counter()
    sel = list(np.flatnonzero(x))
    unsel = list(np.flatnonzero(x == 0))
    g = W @ x.astype(float)
    current = float(lin @ x + 0.5 * g @ x)
    best, best_x = current, x.copy()
    limit = max_evaluations if max_evaluations is not None else math.inf
    evals = 0
    block = 4096
    while evals < limit:
        m = int(min(block, limit - evals)) if limit != math.inf else block
        outs = rng.integers(0, k, m)
        ins = rng.integers(0, n - k, m)
        us = rng.random(m)
        for o, a, u in zip(outs, ins, us):
            r, add = sel[o], unsel[a]
            delta = lin[add] - lin[r] + g[add] - W[add, r] - g[r]
            if delta >= 0 or u < math.exp(delta / temp):
                sel[o], unsel[a] = add, r
                g += W[add] - W[r]
                current += delta
                if current > best:
                    best = current
                    best_x = _selection(n, sel)
            temp = max(temp * cooling, t_min)
        evals += m
        if budget_seconds is not None and time.perf_counter() - t_start >= budget_seconds:
            break
    elapsed = time.perf_counter() - t_start
    return SolverResult(best_x, objective_score(table, weights, best_x), evals, elapsed,
                        "simulated_annealing", seed,
                        {"evaluations_per_second": evals / elapsed if elapsed > 0 else None})


def random_search(table, weights=DEFAULT_WEIGHTS, k=28, iterations=10_000, seed=0):
    """Uniform k-subsets. Returns ``(best, mean, sd)``; sd is 0 for a single sample."""
    n = table.n
    k = check_cardinality(k, n, allow_full=True)
    iterations = check_count(iterations, "iterations", minimum=1)
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    lin = linear_scores(table, weights)
    W = pair_weights(table, weights)
    scores = np.empty(iterations)
    best_x, best = None, -np.inf
    for start in range(0, iterations, 2048):
        m = min(2048, iterations - start)
        picks = np.argsort(rng.random((m, n)), axis=1)[:, :k]
        X = np.zeros((m, n))
        np.put_along_axis(X, picks, 1.0, axis=1)
        s = X @ lin + 0.5 * np.einsum("ij,ij->i", X @ W, X)
        scores[start:start + m] = s
        i = int(np.argmax(s))
        if s[i] > best:
            best, best_x = float(s[i]), X[i].astype(np.int8)
    mean = float(scores.mean())
    sd = float(scores.std(ddof=1)) if iterations > 1 else 0.0
    result = SolverResult(best_x, objective_score(table, weights, best_x), iterations,
                          time.perf_counter() - t0, "random_search", seed,
                          {"mean": mean, "sd": sd})
    return result, mean, sd


def enumerate_exact(table, weights=DEFAULT_WEIGHTS, k=28):
    """Exhaustive maximum; ties go to the lexicographically smallest bitstring."""
    n = table.n
    k = check_cardinality(k, n, allow_full=True)
    total = math.comb(n, k)
    if total > MAX_ENUMERATION:
        raise InstanceTooLargeError(
            f"C({n},{k}) = {total} portfolios exceeds the enumeration guard of {MAX_ENUMERATION}")
    t0 = time.perf_counter()
    lin = linear_scores(table, weights)
    W = pair_weights(table, weights)
    best, best_key, best_x = -np.inf, None, None
    combos = itertools.combinations(range(n), k)
    while True:
        chunk = list(itertools.islice(combos, 65536))
        if not chunk:
            break
        idx = np.array(chunk, dtype=np.int64).reshape(len(chunk), k)
        X = np.zeros((len(chunk), n))
        np.put_along_axis(X, idx, 1.0, axis=1)
        s = X @ lin + 0.5 * np.einsum("ij,ij->i", X @ W, X)
        top = s.max()
        if top < best:
            continue
        for row in np.flatnonzero(s == top):
            key = to_bitstring(X[row].astype(np.int8))
            if top > best or key < best_key:
                best, best_key, best_x = float(top), key, X[row].astype(np.int8)
    return SolverResult(best_x, objective_score(table, weights, best_x), total,
                        time.perf_counter() - t0, "exact")


class _SelectorBase(BaseEstimator):
    def _store(self, result):
        self.result_ = result
        self.portfolio_ = result.portfolio
        self.score_ = result.score
        return self

    def predict(self, X=None):
        """Selected portfolio as a 0/1 vector."""
        check_is_fitted(self, "portfolio_")
        return self.portfolio_

    def score(self, X, y=None):
        check_is_fitted(self, "portfolio_")
        w = self.weights if self.weights is not None else DEFAULT_WEIGHTS
        return objective_score(X, w, self.portfolio_)


class GreedySelector(_SelectorBase):
    def __init__(self, k=28, weights=None):
        self.k = k
        self.weights = weights

    def fit(self, X, y=None):
        return self._store(greedy(X, self.weights or DEFAULT_WEIGHTS, self.k))


class AnnealingSelector(_SelectorBase):
    def __init__(self, k=28, weights=None, max_evaluations=100_000, budget_seconds=None,
                 seed=0, cooling=0.995, greedy_start=False):
        self.k = k
        self.weights = weights
        self.max_evaluations = max_evaluations
        self.budget_seconds = budget_seconds
        self.seed = seed
        self.cooling = cooling
        self.greedy_start = greedy_start

    def fit(self, X, y=None):
        return self._store(simulated_annealing(
            X, self.weights or DEFAULT_WEIGHTS, self.k, self.max_evaluations,
            self.budget_seconds, self.seed, self.cooling,
            start="greedy" if self.greedy_start else None))


class RandomSearchSelector(_SelectorBase):
    def __init__(self, k=28, weights=None, iterations=10_000, seed=0):
        self.k = k
        self.weights = weights
        self.iterations = iterations
        self.seed = seed

    def fit(self, X, y=None):
        result, self.mean_, self.sd_ = random_search(X, self.weights or DEFAULT_WEIGHTS, self.k,
                                                     self.iterations, self.seed)
        return self._store(result)


class ExhaustiveSelector(_SelectorBase):
    def __init__(self, k=5, weights=None):
        self.k = k
        self.weights = weights

    def fit(self, X, y=None):
        return self._store(enumerate_exact(X, self.weights or DEFAULT_WEIGHTS, self.k))
