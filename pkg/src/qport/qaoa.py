"""Dense statevector simulation of warm-started QAOA with an XY mixer.

Conventions
-----------
* Qubit ``i`` is bit ``i`` of the basis index (qubit 0 is least significant).
  Bitstrings in shot records are written MSB first, so qubit ``n-1`` is the
  leftmost character and ``int(bitstring, 2)`` recovers the basis index.
* The XY edge unitary is ``exp(-i * beta * mixer_scale * (X_i X_j + Y_i Y_j))``.
  On the ``{|01>, |10>}`` block the generator equals ``2 * sigma_x``, so the
  block rotation angle is ``theta = 2 * mixer_scale * beta``. The default
  ``mixer_scale = 0.25`` gives ``theta = beta / 2`` (a full swap at
  ``beta = pi``); ``mixer_scale = 1.0`` uses the unnormalized generator.
* Mixer edges are applied once per layer in ascending ``(i, j)`` order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_count, check_portfolio
from .data import min_max_normalize
from .ising import basis_energies
from .qubo import DEFAULT_WEIGHTS, linear_scores

MAX_QUBITS = 24
DEFAULT_GAMMA = 0.05
DEFAULT_BETA = 0.20


class SimulatorLimitError(ValueError):
    """The register is too wide for a dense statevector."""


def _as_layers(value, layers, name):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.repeat(arr, layers)
    if arr.shape != (layers,):
        raise ValueError(f"{name} must be a scalar or have one entry per layer ({layers})")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class QaoaParams:
    """Fixed circuit angles.

    ``mixer`` is ``"ring"``, ``"complete"`` or an explicit list of ``(i, j)`` pairs.
    ``gamma`` and ``beta`` are scalars (reused on every layer) or per-layer sequences.
    """

    gamma: float | tuple = DEFAULT_GAMMA
    beta: float | tuple = DEFAULT_BETA
    layers: int = 1
    mixer: str | tuple = "ring"
    mixer_scale: float = 0.25

    def __post_init__(self):
        check_count(self.layers, "layers", minimum=1)
        _as_layers(self.gamma, self.layers, "gamma")
        _as_layers(self.beta, self.layers, "beta")
        if not isinstance(self.mixer, str):
            object.__setattr__(self, "mixer", tuple(tuple(int(v) for v in e) for e in self.mixer))
        elif self.mixer not in ("ring", "complete"):
            raise ValueError(f"unknown mixer topology {self.mixer!r}")

    @property
    def gammas(self):
        return _as_layers(self.gamma, self.layers, "gamma")

    @property
    def betas(self):
        return _as_layers(self.beta, self.layers, "beta")

    def edges(self, n):
        return mixer_edges(n, self.mixer)

    def to_dict(self):
        mixer = self.mixer if isinstance(self.mixer, str) else [list(e) for e in self.mixer]
        gamma = self.gamma if np.isscalar(self.gamma) else list(self.gamma)
        beta = self.beta if np.isscalar(self.beta) else list(self.beta)
        return {"gamma": gamma, "beta": beta, "layers": self.layers, "mixer": mixer,
                "mixer_scale": self.mixer_scale}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for key in ("gamma", "beta"):
            if isinstance(d.get(key), list):
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass
class ShotRecord:
    """Measurement histogram. Keys are MSB-first bitstrings."""

    counts: dict
    shots: int
    noise_scale: float = 0.0
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        total = sum(self.counts.values())
        if total != self.shots:
            raise ValueError(f"counts sum to {total}, expected {self.shots} shots")

    @property
    def n(self):
        return len(next(iter(self.counts))) if self.counts else 0

    def to_dict(self):
        d = {"shots": self.shots, "noise_scale": self.noise_scale, "seed": self.seed,
             "counts": dict(sorted(self.counts.items()))}
        if self.meta:
            d["meta"] = self.meta
        return d

    @classmethod
    def from_dict(cls, d):
        return cls({str(k): int(v) for k, v in d["counts"].items()}, int(d["shots"]),
                   float(d.get("noise_scale", 0.0)), d.get("seed"), dict(d.get("meta", {})))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def indices(self):
        """Basis indices and counts as parallel int arrays."""
        keys = list(self.counts)
        return (np.array([int(b, 2) for b in keys], dtype=np.int64),
                np.array([self.counts[b] for b in keys], dtype=np.int64))


def check_register(n):
    n = check_count(n, "n", minimum=1)
    if n > MAX_QUBITS:
        raise SimulatorLimitError(f"n={n} exceeds the dense simulator limit of {MAX_QUBITS} qubits")
    return n


def num_qubits(state):
    n = int(state.shape[-1]).bit_length() - 1
    if 1 << n != state.shape[-1]:
        raise ValueError(f"state length {state.shape[-1]} is not a power of two")
    return n


def mixer_edges(n, topology="ring"):
    if isinstance(topology, str):
        if topology == "ring":
            pairs = {(i, (i + 1) % n) for i in range(n)} if n > 1 else set()
        elif topology == "complete":
            pairs = {(i, j) for i in range(n) for j in range(i + 1, n)}
        else:
            raise ValueError(f"unknown mixer topology {topology!r}")
    else:
        pairs = set(tuple(e) for e in topology)
    edges = sorted({(min(a, b), max(a, b)) for a, b in pairs})
    for a, b in edges:
        if a == b or not 0 <= a < n or not 0 <= b < n:
            raise ValueError(f"invalid mixer edge ({a}, {b}) for n={n}")
    return edges


def warm_start_state(n, x0):
    n = check_register(n)
    x0 = check_portfolio(x0, n)
    state = np.zeros(1 << n, dtype=complex)
    state[int(np.dot(x0.astype(np.int64), 1 << np.arange(n, dtype=np.int64)))] = 1.0
    return state


def apply_cost_layer(state, model, gamma, energies=None):
    """Diagonal phase ``exp(-i gamma E(z))``; the offset is dropped as a global phase."""
    if energies is None:
        energies = basis_energies(model)
    return state * np.exp(-1j * gamma * (energies - model.offset))


def _xy_rotate(psi, n, i, j, c, s):
    """In-place XY rotation on the last axis of ``psi`` (any leading batch shape)."""
    lead = psi.shape[:-1]
    view = psi.reshape(*lead, 1 << (n - 1 - j), 2, 1 << (j - 1 - i), 2, 1 << i)
    a = view[..., 0, :, 1, :].copy()  # bit j = 0, bit i = 1
    b = view[..., 1, :, 0, :].copy()
    view[..., 0, :, 1, :] = c * a - 1j * s * b
    view[..., 1, :, 0, :] = c * b - 1j * s * a


def apply_xy_mixer(state, edges, beta, mixer_scale=0.25):
    n = num_qubits(state)
    theta = 2.0 * mixer_scale * beta
    c, s = np.cos(theta), np.sin(theta)
    out = np.array(state, dtype=complex, copy=True)
    for a, b in sorted({(min(e), max(e)) for e in edges}):
        if a == b or not 0 <= a < n or not 0 <= b < n:
            raise ValueError(f"invalid mixer edge ({a}, {b}) for n={n}")
        _xy_rotate(out, n, a, b, c, s)
    return out


def run_qaoa(model, params, x0, energies=None):
    n = check_register(model.n)
    if energies is None:
        energies = basis_energies(model)
    state = warm_start_state(n, x0)
    edges = params.edges(n)
    for gamma, beta in zip(params.gammas, params.betas):
        state = apply_cost_layer(state, model, gamma, energies)
        state = apply_xy_mixer(state, edges, beta, params.mixer_scale)
    return state


def expectation(state, model, energies=None):
    if energies is None:
        energies = basis_energies(model)
    return float(np.abs(state) ** 2 @ energies)


def probabilities(state):
    p = np.abs(state) ** 2
    return p / p.sum()


def counts_from_indices(indices, n):
    idx, cnt = np.unique(np.asarray(indices, dtype=np.int64), return_counts=True)
    return {format(int(i), f"0{n}b"): int(c) for i, c in zip(idx, cnt)}


def sample_shots(state, shots, seed, noise_scale=0.0):
    shots = check_count(shots, "shots", minimum=1)
    n = num_qubits(state)
    draws = np.random.default_rng(seed).multinomial(shots, probabilities(state))
    nz = np.flatnonzero(draws)
    counts = {format(int(i), f"0{n}b"): int(draws[i]) for i in nz}
    return ShotRecord(counts, shots, float(noise_scale), seed)


def record_energies(record, energies):
    """Per-shot mean energy of a record given the basis-energy table."""
    idx, cnt = record.indices()
    return float(cnt @ energies[idx] / record.shots)


def warm_params(table, weights=DEFAULT_WEIGHTS, beta=DEFAULT_BETA, **kwargs):
    """Heuristic angles: ``gamma = 0.05 * (1 + sigma)``, sigma being the population
    standard deviation of the min-max normalized combined per-candidate scores."""
    sigma = float(np.std(min_max_normalize(linear_scores(table, weights))))
    return QaoaParams(gamma=DEFAULT_GAMMA * (1.0 + sigma), beta=beta, layers=1, **kwargs)


class WarmStartQAOA(BaseEstimator):
    """Greedy warm start, fixed-angle p-layer QAOA, and mode-bitstring extraction.

    ``fit(table)`` encodes the table, simulates the circuit exactly and draws
    ``shots`` measurements. Fitted attributes: ``qubo_``, ``ising_``,
    ``warm_start_``, ``params_``, ``state_``, ``expectation_``, ``shots_``,
    ``feasible_rate_``, ``portfolio_``, ``score_``.
    """

    def __init__(self, k=5, penalty_weight=100.0, threshold=0.01, weights=None, gamma=None,
                 beta=DEFAULT_BETA, layers=1, mixer="ring", mixer_scale=0.25, shots=8192,
                 seed=42):
        self.k = k
        self.penalty_weight = penalty_weight
        self.threshold = threshold
        self.weights = weights
        self.gamma = gamma
        self.beta = beta
        self.layers = layers
        self.mixer = mixer
        self.mixer_scale = mixer_scale
        self.shots = shots
        self.seed = seed

    def fit(self, X, y=None):
        from .classical import greedy
        from .qubo import QuboEncoder, objective_score
        from .stats import feasible_shot_rate, mode_bitstring

        w = self.weights if self.weights is not None else DEFAULT_WEIGHTS
        check_register(X.n)
        enc = QuboEncoder(self.k, self.penalty_weight, self.threshold, w).fit(X)
        self.qubo_, self.ising_ = enc.qubo_, enc.ising_
        self.warm_start_ = greedy(X, w, self.k).portfolio
        gamma = self.gamma if self.gamma is not None else warm_params(X, w).gamma
        self.params_ = QaoaParams(gamma, self.beta, self.layers, self.mixer, self.mixer_scale)
        energies = basis_energies(self.ising_)
        self.state_ = run_qaoa(self.ising_, self.params_, self.warm_start_, energies)
        self.expectation_ = expectation(self.state_, self.ising_, energies)
        self.shots_ = sample_shots(self.state_, self.shots, self.seed)
        self.feasible_rate_ = feasible_shot_rate(self.shots_, self.k)
        self.portfolio_ = mode_bitstring(self.shots_, self.k)
        self.score_ = objective_score(X, w, self.portfolio_)
        return self

    def predict(self, X=None):
        """Mode portfolio of the fitted measurement record."""
        check_is_fitted(self, "portfolio_")
        return self.portfolio_
