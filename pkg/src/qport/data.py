"""Municipality score tables and their pairwise synergy matrices.

A table holds ``n`` candidates with normalized carbon, biodiversity and social
scores, plus three symmetric ``n x n`` matrices: binary territorial adjacency
and biodiversity / social synergy in ``[0, 1]``.

On disk a table is four files in one directory::

    goias_multiobjective.csv   id,carbon,biodiversity,social (header row)
    adjacency.csv              dense n x n, no header
    bio_synergy.csv            dense n x n, no header
    soc_synergy.csv            dense n x n, no header
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import check_count, check_square_matrix, readonly

SCORES_FILE = "goias_multiobjective.csv"
ADJACENCY_FILE = "adjacency.csv"
BIO_SYNERGY_FILE = "bio_synergy.csv"
SOC_SYNERGY_FILE = "soc_synergy.csv"
SCORE_COLUMNS = ("id", "carbon", "biodiversity", "social")


class DataError(ValueError):
    """Raised when a table on disk is missing, malformed or inconsistent."""


@dataclass(frozen=True)
class MunicipalityRecord:
    id: str
    carbon: float
    biodiversity: float
    social: float


@dataclass(frozen=True, eq=False)
class MunicipalityTable:
    """Immutable candidate table. Construct through :meth:`from_arrays` to get validation."""

    ids: tuple
    carbon: np.ndarray
    biodiversity: np.ndarray
    social: np.ndarray
    adjacency: np.ndarray
    bio_synergy: np.ndarray
    soc_synergy: np.ndarray

    @classmethod
    def from_arrays(cls, ids, carbon, biodiversity, social, adjacency, bio_synergy, soc_synergy):
        ids = tuple(str(i) for i in ids)
        n = len(ids)
        if n == 0:
            raise DataError("table must contain at least one record")
        if len(set(ids)) != n:
            seen = set()
            dup = next(i for i in ids if i in seen or seen.add(i))
            raise DataError(f"duplicate id {dup!r}")
        cols = {}
        for name, col in (("carbon", carbon), ("biodiversity", biodiversity), ("social", social)):
            arr = np.asarray(col, dtype=float)
            if arr.shape != (n,):
                raise DataError(f"{name} has shape {arr.shape}, expected ({n},)")
            if not np.isfinite(arr).all() or arr.min() < 0 or arr.max() > 1:
                raise DataError(f"{name} scores must lie in [0, 1]")
            cols[name] = readonly(arr)
        try:
            adj = check_square_matrix(adjacency, n, "adjacency")
            if not np.isin(adj, (0.0, 1.0)).all():
                raise ValueError("adjacency entries must be 0 or 1")
            bio = check_square_matrix(bio_synergy, n, "bio_synergy", lo=0.0, hi=1.0)
            soc = check_square_matrix(soc_synergy, n, "soc_synergy", lo=0.0, hi=1.0)
        except ValueError as exc:
            raise DataError(str(exc)) from None
        return cls(ids, cols["carbon"], cols["biodiversity"], cols["social"],
                   readonly(adj), readonly(bio), readonly(soc))

    @property
    def n(self):
        return len(self.ids)

    def __len__(self):
        return self.n

    @property
    def records(self):
        return [MunicipalityRecord(i, float(c), float(b), float(s))
                for i, c, b, s in zip(self.ids, self.carbon, self.biodiversity, self.social)]

    def __eq__(self, other):
        if not isinstance(other, MunicipalityTable):
            return NotImplemented
        return self.ids == other.ids and all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("carbon", "biodiversity", "social", "adjacency", "bio_synergy", "soc_synergy")
        )

    __hash__ = None


def min_max_normalize(values):
    """Affine map onto [0, 1]. A constant input carries no signal and maps to zeros."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot normalize an empty sequence")
    lo, hi = arr.min(), arr.max()
    if hi == lo:
        return np.zeros_like(arr)
    out = (arr - lo) / (hi - lo)
    # guard the endpoints against rounding
    out[arr == lo] = 0.0
    out[arr == hi] = 1.0
    return out


def search_space_size(n, k):
    """Exact number of k-subsets of n candidates."""
    n = check_count(n, "n")
    k = check_count(k, "k")
    if k > n:
        raise ValueError(f"k={k} exceeds n={n}")
    return math.comb(n, k)


def _read_matrix(path, n):
    if not path.exists():
        raise DataError(f"missing matrix file: {path}")
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric entry") from None
    if len(rows) != n or any(len(r) != n for r in rows):
        raise DataError(f"{path}: expected a {n}x{n} matrix to match the score table")
    return np.array(rows)


def load_table(path, adjacency=None, bio_synergy=None, soc_synergy=None):
    """Load and validate a table.

    ``path`` is either the scores CSV or the directory containing it. Matrix
    paths default to the standard file names next to the scores file.
    """
    path = Path(path)
    scores = path / SCORES_FILE if path.is_dir() else path
    if not scores.exists():
        raise DataError(f"missing scores file: {scores}")
    base = scores.parent
    with scores.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SCORE_COLUMNS:
            raise DataError(f"{scores}:1: header must be {','.join(SCORE_COLUMNS)}, got {header}")
        ids, cols = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataError(f"{scores}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                cols.append([float(v) for v in row[1:]])
            except ValueError:
                raise DataError(f"{scores}:{lineno}: non-numeric score") from None
            ids.append(row[0])
    cols = np.array(cols, dtype=float).reshape(-1, 3)
    n = len(ids)
    adj = _read_matrix(Path(adjacency) if adjacency else base / ADJACENCY_FILE, n)
    bio = _read_matrix(Path(bio_synergy) if bio_synergy else base / BIO_SYNERGY_FILE, n)
    soc = _read_matrix(Path(soc_synergy) if soc_synergy else base / SOC_SYNERGY_FILE, n)
    return MunicipalityTable.from_arrays(ids, cols[:, 0], cols[:, 1], cols[:, 2], adj, bio, soc)


def save_table(table, directory):
    """Write ``table`` in the on-disk layout; ``repr`` keeps every double exact."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with (directory / SCORES_FILE).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCORE_COLUMNS)
        for rec in table.records:
            w.writerow([rec.id, repr(rec.carbon), repr(rec.biodiversity), repr(rec.social)])
    for name, mat in ((ADJACENCY_FILE, table.adjacency), (BIO_SYNERGY_FILE, table.bio_synergy),
                      (SOC_SYNERGY_FILE, table.soc_synergy)):
        with (directory / name).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            for row in mat:
                w.writerow([repr(float(v)) for v in row])
    return directory


def _radius_for_degree(n, degree):
    """Radius at which two uniform points in the unit square are adjacent with
    probability ``degree / (n - 1)``; uses the exact distance CDF for r <= 1."""
    target = degree / (n - 1)
    if target >= 1.0:
        return math.sqrt(2.0)

    def cdf(r):
        return math.pi * r * r - 8.0 * r ** 3 / 3.0 + r ** 4 / 2.0

    if target >= cdf(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if cdf(mid) < target else (lo, mid)
    return 0.5 * (lo + hi)


def synthesize_table(n, seed):
    """Deterministic synthetic instance with spatially structured synergies.

    Candidates are points in the unit square; adjacency is a random geometric
    graph whose radius targets a mean degree of about 4. Synergy between
    adjacent candidates is uniform on [0, 1]; between non-adjacent candidates
    it decays exponentially with the distance beyond the radius, so distant
    pairs carry weak but nonzero synergy.
    """
    n = check_count(n, "n", minimum=2)
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    radius = _radius_for_degree(n, 4.0)
    dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    adj = (dist <= radius).astype(float)
    np.fill_diagonal(adj, 0.0)

    decay = np.where(adj > 0, 1.0, np.exp(-np.maximum(dist - radius, 0.0) / (0.5 * radius)))
    np.fill_diagonal(decay, 0.0)

    def synergy():
        u = np.triu(rng.random((n, n)), 1)
        return (u + u.T) * decay

    bio, soc = synergy(), synergy()
    carbon = min_max_normalize(rng.beta(2.0, 2.0, n))
    biodiversity = min_max_normalize(rng.beta(2.0, 2.0, n))
    social = min_max_normalize(rng.beta(2.0, 2.0, n))
    ids = [f"m{i:03d}" for i in range(n)]
    return MunicipalityTable.from_arrays(ids, carbon, biodiversity, social, adj, bio, soc)
