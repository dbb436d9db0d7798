"""Inferential statistics for comparing run-level scores against a fixed baseline.

The t distribution comes from :mod:`scipy.stats`; the rank tests below use
exact null distributions built here (sign-flip distribution of the signed-rank
sum, full enumeration of group assignments, full enumeration of permutations)
so that small-sample p-values are exact even with tied values.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy import stats as sps

from .qubo import from_bitstring


class StatsError(ValueError):
    pass


@dataclass
class TTestResult:
    n: int
    mean_diff: float
    sd_diff: float
    t_stat: float
    df: int
    p_one_sided: float
    cohen_d: float
    ci95: tuple


@dataclass
class ComparisonReport:
    n: int
    mean_score: float
    sd_score: float
    baseline: float
    mean_diff: float
    t_stat: float
    df: int
    p_one_sided: float
    cohen_d: float
    ci95: tuple
    wilcoxon_w: float
    wilcoxon_p: float

    def to_dict(self):
        d = asdict(self)
        d["ci95"] = list(self.ci95)
        return d


@dataclass
class RunSummary:
    run_id: int
    backend: str
    raw_score: float
    zne_score: float
    valid_rate: float
    jaccard: float | None = None
    day: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.valid_rate <= 1.0:
            raise StatsError(f"run {self.run_id}: valid_rate {self.valid_rate} outside [0, 1]")
        if self.jaccard is not None and not 0.0 <= self.jaccard <= 1.0:
            raise StatsError(f"run {self.run_id}: jaccard {self.jaccard} outside [0, 1]")


def paired_t_one_sided(scores, baseline, level=0.95):
    """One-sample t on ``scores - baseline`` with H1: mean difference > 0."""
    d = np.asarray(scores, dtype=float) - float(baseline)
    n = d.size
    if n < 2:
        raise StatsError("the t-test needs at least two runs")
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise StatsError("differences have zero variance; t is undefined")
    mean = float(d.mean())
    se = sd / math.sqrt(n)
    t = mean / se
    df = n - 1
    half = float(sps.t.ppf(0.5 + level / 2, df)) * se
    return TTestResult(n, mean, sd, t, df, float(sps.t.sf(t, df)), mean / sd,
                       (mean - half, mean + half))


def _ranks(values):
    return sps.rankdata(values, method="average")


def wilcoxon_signed_rank(scores, baseline=0.0):
    """Exact one-sided signed-rank test (H1: differences tend to be positive).

    Zero differences are dropped. ``W`` is the sum of ranks of positive
    differences; ties get average ranks. For up to 20 nonzero differences the
    null distribution of ``W`` is computed exactly over all sign patterns,
    beyond that a continuity-free normal approximation is used.
    """
    d = np.asarray(scores, dtype=float) - float(baseline)
    d = d[d != 0]
    n = d.size
    if n == 0:
        raise StatsError("all differences are zero")
    ranks = _ranks(np.abs(d))
    w = float(ranks[d > 0].sum())
    if n <= 20:
        doubled = np.rint(2 * ranks).astype(np.int64)
        dist = np.zeros(int(doubled.sum()) + 1)
        dist[0] = 1.0
        for r in doubled:
            shifted = np.zeros_like(dist)
            shifted[r:] = dist[:-r]
            dist = dist + shifted
        dist /= dist.sum()
        p = float(dist[int(round(2 * w)):].sum())
    else:
        mu = n * (n + 1) / 4
        sigma = math.sqrt((ranks ** 2).sum() / 4)
        p = float(sps.norm.sf((w - mu) / sigma))
    return w, min(p, 1.0)


def compare_to_baseline(scores, baseline):
    scores = np.asarray(scores, dtype=float)
    t = paired_t_one_sided(scores, baseline)
    w, wp = wilcoxon_signed_rank(scores, baseline)
    return ComparisonReport(t.n, float(scores.mean()), float(scores.std(ddof=1)), float(baseline),
                            t.mean_diff, t.t_stat, t.df, t.p_one_sided, t.cohen_d, t.ci95, w, wp)


def _selected(x):
    return set(np.flatnonzero(np.asarray(x)))


def jaccard(a, b):
    """``|A & B| / |A | B|`` of the selected index sets; 1.0 when both are empty."""
    if np.shape(a) != np.shape(b):
        raise StatsError("portfolios have different lengths")
    sa, sb = _selected(a), _selected(b)
    union = sa | sb
    return 1.0 if not union else len(sa & sb) / len(union)


def overlap_coefficient(a, b):
    """``|A & B| / min(|A|, |B|)``; equals shared/k for two k-portfolios."""
    sa, sb = _selected(a), _selected(b)
    smaller = min(len(sa), len(sb))
    return 1.0 if smaller == 0 else len(sa & sb) / smaller


def spearman(x, y, method="auto"):
    """Spearman rho with average ranks and a two-sided p-value.

    ``method="exact"`` enumerates all permutations of ``y`` (used by ``"auto"``
    up to n = 10); ``"asymptotic"`` uses the t approximation with n - 2 df.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise StatsError("x and y must have equal length")
    n = x.size
    if n < 3:
        raise StatsError("spearman needs at least three pairs")
    rx, ry = _ranks(x), _ranks(y)
    if rx.std() == 0 or ry.std() == 0:
        raise StatsError("spearman is undefined for a constant input")
    rho = float(np.corrcoef(rx, ry)[0, 1])
    if method == "auto":
        method = "exact" if n <= 10 else "asymptotic"
    if method == "exact":
        cx = rx - rx.mean()
        denom = math.sqrt((cx ** 2).sum() * ((ry - ry.mean()) ** 2).sum())
        perms = np.array(list(itertools.permutations(ry)))
        null = (perms - ry.mean()) @ cx / denom
        p = float(np.mean(np.abs(null) >= abs(rho) - 1e-12))
    elif method == "asymptotic":
        if abs(rho) >= 1.0:
            p = 0.0
        else:
            t = rho * math.sqrt((n - 2) / (1 - rho ** 2))
            p = float(2 * sps.t.sf(abs(t), n - 2))
    else:
        raise ValueError(f"unknown method {method!r}")
    return rho, min(p, 1.0)


def mann_whitney_u(group_a, group_b):
    """Exact two-sided Mann-Whitney test.

    Returns ``U = min(U_a, U_b)`` (ties count one half) and the two-sided
    p-value, twice the smaller tail of the exact null distribution of ``U_a``
    over every assignment of the pooled values to the groups, capped at 1.
    """
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise StatsError("both groups must be non-empty")
    pooled = np.concatenate([a, b])
    ranks = _ranks(pooled)
    na, nb = a.size, b.size
    offset = na * (na + 1) / 2
    u_a = float(ranks[:na].sum() - offset)
    u = min(u_a, na * nb - u_a)
    if math.comb(na + nb, na) > 2_000_000:
        raise StatsError("groups too large for exact enumeration")
    null = np.array([ranks[list(c)].sum() - offset
                     for c in itertools.combinations(range(na + nb), na)])
    lower = float(np.mean(null <= u_a + 1e-9))
    upper = float(np.mean(null >= u_a - 1e-9))
    return u, min(1.0, 2 * min(lower, upper))


def run_bootstrap_mean(scores, b=100, seed=42, level=0.95):
    """Percentile bootstrap interval for the mean of ``scores``."""
    x = np.asarray(scores, dtype=float)
    if x.size == 0:
        raise StatsError("no scores to resample")
    rng = np.random.default_rng(seed)
    means = rng.choice(x, size=(int(b), x.size), replace=True).mean(axis=1)
    alpha = 100 * (1 - level) / 2
    lo, hi = np.percentile(means, [alpha, 100 - alpha])
    return [float(lo), float(hi)]


def leave_one_out(scores, baseline):
    """One report (or the StatsError raised) per excluded run."""
    x = np.asarray(scores, dtype=float)
    if x.size < 3:
        raise StatsError("leave-one-out needs at least three runs")
    out = []
    for i in range(x.size):
        try:
            out.append(compare_to_baseline(np.delete(x, i), baseline))
        except StatsError as exc:
            out.append(exc)
    return out


def feasible_shot_rate(record, k):
    if record.shots < 1:
        raise StatsError("empty shot record")
    good = sum(c for b, c in record.counts.items() if b.count("1") == k)
    return good / record.shots


def mode_bitstring(record, k):
    """Most frequent weight-k bitstring; ties go to the lexicographically smaller one."""
    feasible = [(b, c) for b, c in record.counts.items() if b.count("1") == k]
    if not feasible:
        raise StatsError(f"no shot in the record has exactly {k} selected candidates")
    best = min(feasible, key=lambda bc: (-bc[1], bc[0]))[0]
    return from_bitstring(best)


def replay_runs(path):
    """Load run-level results.

    Accepts either a JSON list of run objects or an object with a ``runs``
    list. Each run needs ``run_id``, ``backend``, ``raw_score``, ``zne_score``
    and ``valid_rate`` (fraction); ``jaccard`` and ``day`` are optional.
    """
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    runs = doc.get("runs") if isinstance(doc, dict) else doc
    if not isinstance(runs, list):
        raise StatsError(f"{path}: expected a list of runs")
    out = []
    required = ("run_id", "backend", "raw_score", "zne_score", "valid_rate")
    for i, r in enumerate(runs):
        missing = [f for f in required if f not in r]
        if missing:
            raise StatsError(f"{path}: run #{i} lacks {', '.join(missing)}")
        out.append(RunSummary(int(r["run_id"]), str(r["backend"]), float(r["raw_score"]),
                              float(r["zne_score"]), float(r["valid_rate"]),
                              None if r.get("jaccard") is None else float(r["jaccard"]),
                              None if r.get("day") is None else int(r["day"])))
    return out


def replay_baseline(path, default=None):
    """Baseline score stored alongside replayed runs, if any."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(doc, dict) and "baseline" in doc:
        return float(doc["baseline"])
    return default


def reference_runs_path():
    return Path(__file__).with_name("data") / "reference_runs.json"
