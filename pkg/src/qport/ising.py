"""Ising form of a QUBO under ``x_i = (1 - z_i) / 2``.

Spin convention: ``z = +1`` means the candidate is not selected (``x = 0``),
``z = -1`` means selected (``x = 1``). The offset absorbs both the constant
produced by the substitution and the QUBO's tracked penalty constant, so

    ising_energy(model, spins(x)) == penalized_energy(qubo, x) + qubo.constant
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import readonly


@dataclass(frozen=True, eq=False)
class IsingModel:
    h: np.ndarray
    j: dict
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "h", readonly(np.asarray(self.h, dtype=float)))
        couplings = {}
        for (a, b), v in self.j.items():
            a, b = int(a), int(b)
            if not 0 <= a < b < self.n:
                raise ValueError(f"coupling key ({a}, {b}) must satisfy 0 <= i < j < n")
            couplings[(a, b)] = float(v)
        object.__setattr__(self, "j", dict(sorted(couplings.items())))

    @property
    def n(self):
        return self.h.shape[0]

    def to_dict(self):
        return {
            "n": self.n,
            "h": [float(v) for v in self.h],
            "j": [[a, b, v] for (a, b), v in self.j.items()],
            "offset": self.offset,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["h"], dtype=float),
                   {(int(a), int(b)): float(v) for a, b, v in d["j"]}, float(d["offset"]))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def qubo_to_ising(qubo):
    """Ising model of a :class:`QuboProblem`, or of a bare upper-triangular matrix."""
    if isinstance(qubo, np.ndarray):
        q, constant = qubo, 0.0
    else:
        q, constant = np.asarray(qubo.q), qubo.constant
    diag = np.diag(q).copy()
    upper = np.triu(q, 1)
    # x_i x_j = (1 - z_i - z_j + z_i z_j) / 4 ; x_i = (1 - z_i) / 2
    h = -diag / 2 - (upper.sum(axis=1) + upper.sum(axis=0)) / 4
    rows, cols = np.nonzero(upper)
    j = {(int(a), int(b)): float(upper[a, b]) / 4 for a, b in zip(rows, cols)}
    offset = float(diag.sum() / 2 + upper.sum() / 4 + constant)
    return IsingModel(h, j, offset)


def spins(x):
    """0/1 selection vector to +-1 spins."""
    return 1 - 2 * np.asarray(x, dtype=np.int64)


def ising_energy(model, z):
    z = np.asarray(z)
    if z.shape != (model.n,):
        raise ValueError(f"spin vector has shape {z.shape}, expected ({model.n},)")
    if not np.isin(z, (-1, 1)).all():
        raise ValueError("spins must be +1 or -1")
    e = model.offset + float(model.h @ z)
    for (a, b), v in model.j.items():
        e += v * z[a] * z[b]
    return e


def basis_energies(model):
    """Energy of every computational basis state; index bit ``i`` is qubit ``i`` (LSB first)."""
    n = model.n
    idx = np.arange(1 << n, dtype=np.int64)
    z = [1 - 2 * ((idx >> i) & 1).astype(np.int8) for i in range(n)]
    e = np.full(1 << n, model.offset)
    for i, hi in enumerate(model.h):
        if hi:
            e += hi * z[i]
    for (a, b), v in model.j.items():
        e += v * (z[a] * z[b])
    return e
