"""Multi-objective portfolio score and its penalized QUBO encoding.

The portfolio score is maximized; QUBO solvers minimize. The encoder therefore
negates every benefit term, so that for a binary vector ``x``::

    x @ Q @ x + constant == (-score(x) + penalty * (sum(x) - k)**2) / scale

where ``Q`` is upper triangular, ``constant = penalty * k**2 / scale`` and
``scale`` is the largest absolute pre-scaling entry. Sparsification only ever
removes synergy contributions; the ``2 * penalty`` coupling that enforces the
cardinality constraint is never dropped.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_cardinality, check_portfolio, check_portfolios, readonly


@dataclass(frozen=True)
class ObjectiveWeights:
    w_carbon: float = 0.33
    w_biodiversity: float = 0.33
    w_social: float = 0.34
    lambda_carbon: float = 0.15
    lambda_biodiversity: float = 0.25
    lambda_social: float = 0.20
    n_biomes: int = 1

    def __post_init__(self):
        ws = (self.w_carbon, self.w_biodiversity, self.w_social)
        if any(w < 0 for w in ws) or any(
            v < 0 for v in (self.lambda_carbon, self.lambda_biodiversity, self.lambda_social)
        ):
            raise ValueError("objective weights must be non-negative")
        if abs(sum(ws) - 1.0) > 1e-12:
            raise ValueError(f"objective weights must sum to 1, got {sum(ws)!r}")
        if self.n_biomes < 1:
            raise ValueError("n_biomes must be >= 1")

    @classmethod
    def from_dict(cls, d):
        return cls(**(d or {}))

    def to_dict(self):
        return asdict(self)


DEFAULT_WEIGHTS = ObjectiveWeights()


def linear_scores(table, weights=DEFAULT_WEIGHTS):
    """Per-candidate benefit ``w_C c_i + w_B b_i + w_S s_i``."""
    return (weights.w_carbon * table.carbon + weights.w_biodiversity * table.biodiversity
            + weights.w_social * table.social)


def pair_weights(table, weights=DEFAULT_WEIGHTS):
    """Symmetric, zero-diagonal matrix of pairwise synergy benefits."""
    return (weights.w_carbon * weights.lambda_carbon * table.adjacency
            + weights.w_biodiversity * math.sqrt(weights.n_biomes) * weights.lambda_biodiversity
            * table.bio_synergy
            + weights.w_social * weights.lambda_social * table.soc_synergy)


def objective_score(table, weights, x):
    """Unpenalized portfolio score (higher is better)."""
    x = check_portfolio(x, table.n).astype(float)
    return float(linear_scores(table, weights) @ x + 0.5 * x @ pair_weights(table, weights) @ x)


def objective_scores(table, weights, X):
    """Vectorized :func:`objective_score` over the rows of ``X``."""
    X = check_portfolios(X, table.n).astype(float)
    W = pair_weights(table, weights)
    return X @ linear_scores(table, weights) + 0.5 * np.einsum("ij,ij->i", X @ W, X)


def feasibility(x, k):
    return int(np.asarray(x).sum()) == int(k)


def to_bitstring(x):
    """MSB-first string: qubit/candidate ``n-1`` is the leftmost character."""
    return "".join("1" if b else "0" for b in np.asarray(x)[::-1])


def from_bitstring(s):
    return np.array([int(c) for c in reversed(s)], dtype=np.int8)


@dataclass(frozen=True, eq=False)
class QuboProblem:
    """Scaled upper-triangular QUBO plus the metadata needed to undo the scaling."""

    q: np.ndarray
    k: int
    penalty_weight: float
    scale: float
    threshold: float
    dropped_count: int
    constant: float
    weights: ObjectiveWeights = field(default=DEFAULT_WEIGHTS)

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError(f"q must be square, got shape {q.shape}")
        if np.any(np.tril(q, -1) != 0):
            raise ValueError("q must be upper triangular")
        if not 0 < self.k < q.shape[0]:
            raise ValueError(f"k={self.k} outside (0, {q.shape[0]})")
        object.__setattr__(self, "q", readonly(q))

    @property
    def n(self):
        return self.q.shape[0]

    @property
    def offdiagonal_nonzeros(self):
        return int(np.count_nonzero(np.triu(self.q, 1)))

    def score_from_energy(self, energy):
        """Map an energy that includes ``constant`` back to the penalized score."""
        return -self.scale * energy

    def to_dict(self):
        rows, cols = np.nonzero(self.q)
        return {
            "n": self.n,
            "k": self.k,
            "penalty_weight": self.penalty_weight,
            "scale": self.scale,
            "threshold": self.threshold,
            "dropped_count": self.dropped_count,
            "constant": self.constant,
            "weights": self.weights.to_dict(),
            "entries": [[int(i), int(j), float(self.q[i, j])] for i, j in zip(rows, cols)],
        }

    @classmethod
    def from_dict(cls, d):
        n = int(d["n"])
        q = np.zeros((n, n))
        for i, j, v in d["entries"]:
            q[int(i), int(j)] = float(v)
        return cls(q, int(d["k"]), float(d["penalty_weight"]), float(d["scale"]),
                   float(d["threshold"]), int(d.get("dropped_count", 0)), float(d["constant"]),
                   ObjectiveWeights.from_dict(d.get("weights")))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def build_qubo(table, weights=DEFAULT_WEIGHTS, k=28, penalty_weight=100.0, threshold=0.01):
    """Encode the cardinality-constrained score maximization as a minimization QUBO."""
    n = table.n
    k = check_cardinality(k, n)
    if not penalty_weight > 0:
        raise ValueError(f"penalty_weight must be positive, got {penalty_weight}")
    if threshold < 0:
        raise ValueError("threshold must be non-negative")

    synergy = np.triu(pair_weights(table, weights), 1)
    small = (synergy != 0) & (np.abs(synergy) < threshold)
    dropped = int(small.sum())
    synergy = np.where(small, 0.0, synergy)

    q = -synergy + np.triu(np.full((n, n), 2.0 * penalty_weight), 1)
    q[np.diag_indices(n)] = -linear_scores(table, weights) + penalty_weight * (1 - 2 * k)
    scale = float(np.abs(q).max())
    return QuboProblem(q / scale, k, float(penalty_weight), scale, float(threshold), dropped,
                       penalty_weight * k * k / scale, weights)


def penalized_energy(qubo, x):
    """``x^T Q x`` on the scaled matrix, excluding ``qubo.constant``."""
    x = check_portfolio(x, qubo.n).astype(float)
    return float(x @ qubo.q @ x)


def penalized_energies(qubo, X):
    X = check_portfolios(X, qubo.n).astype(float)
    return np.einsum("ij,ij->i", X @ qubo.q, X)


class QuboEncoder(BaseEstimator):
    """Fit on a :class:`~qport.data.MunicipalityTable`; transform portfolios to energies.

    After ``fit`` the encoded problem is available as ``qubo_`` and its Ising
    form as ``ising_``. ``transform`` returns the penalized energy (including
    the tracked constant) of each row of a 0/1 portfolio matrix.
    """

    def __init__(self, k=28, penalty_weight=100.0, threshold=0.01, weights=None):
        self.k = k
        self.penalty_weight = penalty_weight
        self.threshold = threshold
        self.weights = weights

    def fit(self, X, y=None):
        from .ising import qubo_to_ising

        w = self.weights if self.weights is not None else DEFAULT_WEIGHTS
        self.qubo_ = build_qubo(X, w, self.k, self.penalty_weight, self.threshold)
        self.ising_ = qubo_to_ising(self.qubo_)
        self.n_features_in_ = X.n
        return self

    def transform(self, X):
        check_is_fitted(self, "qubo_")
        return penalized_energies(self.qubo_, X) + self.qubo_.constant
