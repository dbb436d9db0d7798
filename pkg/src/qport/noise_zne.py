"""Noise amplification, noisy trajectory sampling and zero-noise extrapolation.

Noise model: after every XY mixer edge (and, with ``noisy_cost=True``, after
every two-qubit ``ZZ`` phase) a two-qubit depolarizing channel acts on the
edge's qubits. With probability ``p`` the pair is hit by one of the 16
two-qubit Pauli operators chosen uniformly (identity included), i.e.
``rho -> (1 - p) rho + p * Tr_ij(rho) (x) I/4``. Because the identity is in
the twirl, ``lam`` repetitions of the channel compose to a single channel
with ``p_eff = 1 - (1 - p) ** lam``; :func:`effective_error` implements that
rule and a noise scale ``lam`` stands for the channel being applied ``lam``
times per gate (the folding picture, generalised to real ``lam``).

Each shot is one Monte Carlo trajectory: errors are drawn per shot, shots
without errors are sampled from the noiseless final state, and the remaining
trajectories are simulated in batches from the noiseless prefix state at
their first error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_count, check_probability
from .ising import basis_energies
from .qaoa import (
    ShotRecord,
    _xy_rotate,
    check_register,
    counts_from_indices,
    sample_shots,
    warm_start_state,
)

METHODS = ("linear", "quadratic", "richardson")
_BATCH_AMPLITUDES = 1 << 22


@dataclass(frozen=True)
class NoiseConfig:
    two_qubit_error: float = 0.01
    fold_factor: float = 1.0
    seed: int = 0
    noisy_cost: bool = False

    def __post_init__(self):
        check_probability(self.two_qubit_error, "two_qubit_error")
        if not self.fold_factor >= 1:
            raise ValueError(f"fold_factor must be >= 1, got {self.fold_factor}")
        if not self.effective < 1.0:
            raise ValueError("effective error probability rounds to 1; lower the noise scale")

    @property
    def effective(self):
        return effective_error(self.two_qubit_error, self.fold_factor)


def effective_error(base_prob, lam):
    """Error probability of the depolarizing channel applied ``lam`` times."""
    base_prob = check_probability(base_prob, "base_prob")
    lam = float(lam)
    if not lam >= 1:
        raise ValueError(f"noise scale must be >= 1, got {lam}")
    return -math.expm1(lam * math.log1p(-base_prob))


# --- trajectory simulation ---------------------------------------------------

def _apply_pauli(psi, n, q, p):
    """Pauli ``p`` (0=I, 1=X, 2=Y, 3=Z) on qubit ``q``, in place on the last axis."""
    if p == 0:
        return
    view = psi.reshape(*psi.shape[:-1], 1 << (n - 1 - q), 2, 1 << q)
    a0 = view[..., 0, :].copy()
    a1 = view[..., 1, :].copy()
    if p == 1:
        view[..., 0, :], view[..., 1, :] = a1, a0
    elif p == 2:
        view[..., 0, :], view[..., 1, :] = -1j * a1, 1j * a0
    else:
        view[..., 1, :] = -a1


def _circuit_ops(model, params, energies, noisy_cost):
    """Ordered ``(kind, payload, noisy_pair)`` list; ``noisy_pair`` marks a noise slot."""
    n = model.n
    edges = params.edges(n)
    ops = []
    if noisy_cost:
        idx = np.arange(1 << n, dtype=np.int64)
        z = [1 - 2 * ((idx >> i) & 1).astype(np.int8) for i in range(n)]
        field_part = np.zeros(1 << n)
        for i, hi in enumerate(model.h):
            field_part += hi * z[i]
    for gamma, beta in zip(params.gammas, params.betas):
        if noisy_cost:
            ops.append(("phase", np.exp(-1j * gamma * field_part), None))
            for (a, b), v in model.j.items():
                ops.append(("phase", np.exp(-1j * gamma * v * (z[a] * z[b])), (a, b)))
        else:
            ops.append(("phase", np.exp(-1j * gamma * (energies - model.offset)), None))
        theta = 2.0 * params.mixer_scale * beta
        c, s = math.cos(theta), math.sin(theta)
        for a, b in edges:
            ops.append(("xy", (a, b, c, s), (a, b)))
    return ops


def _apply_op(psi, n, op):
    kind, payload, _ = op
    if kind == "phase":
        psi *= payload
    else:
        a, b, c, s = payload
        _xy_rotate(psi, n, a, b, c, s)


def noisy_run(model, params, x0, noise, shots, energies=None):
    """Sample ``shots`` trajectories of the noisy circuit at noise scale ``noise.fold_factor``."""
    n = check_register(model.n)
    shots = check_count(shots, "shots", minimum=1)
    if energies is None:
        energies = basis_energies(model)
    p_eff = noise.effective
    ops = _circuit_ops(model, params, energies, noise.noisy_cost)
    slots = [t for t, op in enumerate(ops) if op[2] is not None]
    slot_of = {t: s for s, t in enumerate(slots)}

    rng = np.random.default_rng([noise.seed, 1])
    hit = rng.random((shots, len(slots))) < p_eff
    codes = np.where(hit, rng.integers(0, 16, size=hit.shape), 0).astype(np.int8)
    dirty = np.flatnonzero(codes.any(axis=1))
    n_clean = shots - dirty.size

    state = warm_start_state(n, x0)
    first_slot = np.argmax(codes[dirty] != 0, axis=1) if dirty.size else np.array([], int)
    outcomes = []
    chunk = max(1, _BATCH_AMPLITUDES >> n)
    for t, op in enumerate(ops):
        _apply_op(state, n, op)
        if t not in slot_of:
            continue
        group = dirty[first_slot == slot_of[t]]
        for start in range(0, group.size, chunk):
            rows = group[start:start + chunk]
            batch = np.tile(state, (rows.size, 1))
            for u in range(t, len(ops)):
                if u > t:
                    _apply_op(batch, n, ops[u])
                if u not in slot_of:
                    continue
                col = codes[rows, slot_of[u]]
                a, b = ops[u][2]
                for code in np.unique(col[col != 0]):
                    sel = col == code
                    sub = batch[sel]
                    _apply_pauli(sub, n, a, int(code) // 4)
                    _apply_pauli(sub, n, b, int(code) % 4)
                    batch[sel] = sub
            cum = np.cumsum(np.abs(batch) ** 2, axis=1)
            u_draw = rng.random(rows.size) * cum[:, -1]
            picks = np.minimum((cum < u_draw[:, None]).sum(axis=1), (1 << n) - 1)
            outcomes.append(picks)

    counts = {}
    if n_clean:
        counts.update(sample_shots(state, n_clean, noise.seed).counts)
    if outcomes:
        for key, c in counts_from_indices(np.concatenate(outcomes), n).items():
            counts[key] = counts.get(key, 0) + c
    meta = {"p_eff": p_eff, "two_qubit_error": noise.two_qubit_error,
            "error_trajectories": int(dirty.size)}
    return ShotRecord(dict(sorted(counts.items())), shots, float(noise.fold_factor), noise.seed,
                      meta)


# --- extrapolation -------------------------------------------------------------

def _points(points, minimum, label):
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("points must be a sequence of (lambda, value) pairs")
    if np.unique(arr[:, 0]).size < minimum:
        raise ValueError(f"{label} extrapolation needs at least {minimum} distinct noise scales")
    return arr[:, 0], arr[:, 1]


def extrapolate_linear(points):
    """Least-squares line; returns ``(value at lambda=0, R^2)``.

    R^2 is NaN when the values are constant (total variance zero).
    """
    lam, e = _points(points, 2, "linear")
    A = np.column_stack([np.ones_like(lam), lam])
    coef, *_ = np.linalg.lstsq(A, e, rcond=None)
    ss_res = float(((e - A @ coef) ** 2).sum())
    ss_tot = float(((e - e.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")
    return float(coef[0]), r2


def extrapolate_quadratic(points):
    """Least-squares parabola evaluated at zero; exact interpolation for three points."""
    lam, e = _points(points, 3, "quadratic")
    A = np.column_stack([np.ones_like(lam), lam, lam ** 2])
    if lam.size == 3:
        return float(np.linalg.solve(A, e)[0])
    coef, *_ = np.linalg.lstsq(A, e, rcond=None)
    return float(coef[0])


def richardson(e1, e2, e3):
    """Zero-noise combination for noise scales 1, 2, 3."""
    return 3.0 * e1 - 3.0 * e2 + e3


def richardson_weights(lambdas):
    """Lagrange weights of the interpolating polynomial at zero; (3, -3, 1) for (1, 2, 3)."""
    lam = np.asarray(lambdas, dtype=float)
    w = np.ones_like(lam)
    for i in range(lam.size):
        for j in range(lam.size):
            if i != j:
                w[i] *= lam[j] / (lam[j] - lam[i])
    return w


def extrapolate_richardson(points):
    lam, e = _points(points, 3, "richardson")
    if lam.size != 3:
        raise ValueError("richardson extrapolation takes exactly three noise scales")
    order = np.argsort(lam)
    lam, e = lam[order], e[order]
    if np.array_equal(lam, [1.0, 2.0, 3.0]):
        return richardson(*e)
    return float(richardson_weights(lam) @ e)


def extrapolate(points, method):
    if method == "linear":
        return extrapolate_linear(points)[0]
    if method == "quadratic":
        return extrapolate_quadratic(points)
    if method == "richardson":
        return extrapolate_richardson(points)
    raise ValueError(f"unknown extrapolation method {method!r}; choose from {METHODS}")


# --- bootstrap -----------------------------------------------------------------

def _record_values(record, scorer):
    keys = list(record.counts)
    values = np.array([scorer(k) for k in keys], dtype=float)
    weights = np.array([record.counts[k] for k in keys], dtype=float) / record.shots
    return values, weights


def bootstrap_ci(records, method="quadratic", b=100, seed=42, scorer=None, level=0.95):
    """Percentile bootstrap of an extrapolated value over shot-level resamples.

    Each resample redraws every record's shots with replacement (a multinomial
    over its observed bitstrings), recomputes the per-scale means and
    re-extrapolates. Resample ``i`` uses its own stream seeded by ``(seed, i)``.
    Bitstrings the scorer maps to NaN are excluded from the mean (post-selection).
    """
    if not records:
        raise ValueError("bootstrap needs at least one shot record")
    if any(r.shots < 1 or not r.counts for r in records):
        raise ValueError("empty shot record")
    b = check_count(b, "b", minimum=1)
    if scorer is None:
        raise ValueError("a scorer mapping bitstrings to values is required")
    lambdas = [r.noise_scale for r in records]
    prepared = [_record_values(r, scorer) for r in records]
    estimates = np.empty(b)
    for i in range(b):
        rng = np.random.default_rng([seed, i])
        means = []
        for r, (v, w) in zip(records, prepared):
            draw = rng.multinomial(r.shots, w)
            keep = ~np.isnan(v)
            total = draw[keep].sum()
            means.append(draw[keep] @ v[keep] / total if total else np.nan)
        estimates[i] = extrapolate(list(zip(lambdas, means)), method)
    alpha = 100 * (1 - level) / 2
    lo, hi = np.percentile(estimates, [alpha, 100 - alpha])
    return [float(lo), float(hi)]


@dataclass
class ZneEstimate:
    lambdas: list
    values: list
    linear_e0: float
    linear_r2: float
    quadratic_e0: float | None = None
    richardson_e0: float | None = None
    bootstrap_ci: dict = field(default_factory=dict)
    bootstrap_resamples: int = 0
    bootstrap_seed: int | None = None
    record_seeds: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.lambdas) != len(self.values) or len(self.values) < 2:
            raise ValueError("need matching lambdas/values with at least two points")

    @property
    def quadratic_r2(self):
        """Undefined: three points leave no residual degrees of freedom."""
        return None

    def to_dict(self):
        def clean(v):
            return None if v is None or (isinstance(v, float) and math.isnan(v)) else v

        return {
            "lambdas": list(self.lambdas),
            "values": list(self.values),
            "linear": {"e0": self.linear_e0, "r2": clean(self.linear_r2)},
            "quadratic": {"e0": clean(self.quadratic_e0), "r2": None},
            "richardson": {"e0": clean(self.richardson_e0)},
            "bootstrap": {"resamples": self.bootstrap_resamples, "seed": self.bootstrap_seed,
                          "method": "percentile", "ci95": self.bootstrap_ci},
            "record_seeds": list(self.record_seeds),
        }


def zne_estimate(lambdas, values, records=None, scorer=None, b=100, seed=42):
    """All three extrapolations plus, when shot records are given, bootstrap intervals."""
    pts = list(zip(map(float, lambdas), map(float, values)))
    e0_lin, r2 = extrapolate_linear(pts)
    distinct = len({p[0] for p in pts})
    quad = extrapolate_quadratic(pts) if distinct >= 3 else None
    rich = extrapolate_richardson(pts) if len(pts) == 3 and distinct == 3 else None
    est = ZneEstimate([p[0] for p in pts], [p[1] for p in pts], e0_lin, r2, quad, rich)
    if records is not None:
        est.bootstrap_resamples, est.bootstrap_seed = b, seed
        est.record_seeds = [r.seed for r in records]
        for method, value in (("linear", e0_lin), ("quadratic", quad), ("richardson", rich)):
            if value is not None:
                est.bootstrap_ci[method] = bootstrap_ci(records, method, b, seed, scorer)
    return est


class ZeroNoiseExtrapolator(RegressorMixin, BaseEstimator):
    """Regress expectation values on noise scale and read off the zero-noise limit.

    ``fit(lambdas, values)`` sets ``coef_`` (polynomial coefficients, constant
    first), ``zero_noise_value_`` and, for the linear model, ``r2_``.
    ``predict(lambdas)`` evaluates the fitted curve.
    """

    def __init__(self, method="quadratic"):
        self.method = method

    def fit(self, X, y):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        lam = np.asarray(X, dtype=float).reshape(-1)
        e = np.asarray(y, dtype=float).reshape(-1)
        if lam.shape != e.shape:
            raise ValueError("X and y must have the same number of points")
        pts = list(zip(lam, e))
        if self.method == "linear":
            self.zero_noise_value_, self.r2_ = extrapolate_linear(pts)
            degree = 1
        elif self.method == "quadratic":
            self.zero_noise_value_ = extrapolate_quadratic(pts)
            degree = 2
        else:
            self.zero_noise_value_ = extrapolate_richardson(pts)
            degree = 2
        A = np.vander(lam, degree + 1, increasing=True)
        self.coef_ = np.linalg.lstsq(A, e, rcond=None)[0]
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        lam = np.asarray(X, dtype=float).reshape(-1)
        return np.vander(lam, self.coef_.size, increasing=True) @ self.coef_
