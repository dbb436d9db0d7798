"""Experiment configuration, seed-stamped records and report assembly used by the CLI."""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .classical import enumerate_exact, greedy, random_search, simulated_annealing
from .data import load_table, synthesize_table
from .ising import basis_energies, qubo_to_ising
from .noise_zne import NoiseConfig, noisy_run, zne_estimate
from .qaoa import QaoaParams, check_register, expectation, run_qaoa, sample_shots, warm_params
from .qubo import ObjectiveWeights, build_qubo, from_bitstring, objective_score
from .stats import (
    RunSummary,
    StatsError,
    compare_to_baseline,
    feasible_shot_rate,
    jaccard,
    leave_one_out,
    mann_whitney_u,
    mode_bitstring,
    overlap_coefficient,
    paired_t_one_sided,
    run_bootstrap_mean,
    spearman,
)

OUT_ENV = "QPORT_OUT_DIR"
SOLVERS = ("greedy", "sa", "random", "exact")


class ConfigError(ValueError):
    pass


class OutputExistsError(FileExistsError):
    pass


def clean_json(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats to plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): clean_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean_json(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps(obj):
    return json.dumps(clean_json(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    data: dict = field(default_factory=lambda: {"synth": {"n": 20, "seed": 42}})
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    k: int = 5
    penalty_weight: float = 100.0
    threshold: float = 0.01
    qaoa: dict = field(default_factory=dict)
    two_qubit_error: float = 0.01
    noisy_cost: bool = False
    lambdas: list = field(default_factory=lambda: [1.0, 2.0, 3.0])
    shots: int = 8192
    seeds: list = field(default_factory=lambda: [42])
    bootstrap_resamples: int = 100
    bootstrap_seed: int = 42
    solver: dict = field(default_factory=dict)
    record_timing: bool = False
    output_dir: str | None = None
    base_dir: Path = field(default=Path("."), repr=False, compare=False)

    @classmethod
    def from_dict(cls, d, base_dir=Path(".")):
        d = dict(d)
        known = {f for f in cls.__dataclass_fields__ if f != "base_dir"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
        if "weights" in d:
            d["weights"] = ObjectiveWeights.from_dict(d["weights"])
        cfg = cls(**d, base_dir=Path(base_dir))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
        return cls.from_dict(doc, path.parent)

    def to_dict(self):
        return {
            "name": self.name, "data": self.data, "weights": self.weights.to_dict(), "k": self.k,
            "penalty_weight": self.penalty_weight, "threshold": self.threshold,
            "qaoa": self.qaoa, "two_qubit_error": self.two_qubit_error,
            "noisy_cost": self.noisy_cost, "lambdas": list(self.lambdas), "shots": self.shots,
            "seeds": list(self.seeds), "bootstrap_resamples": self.bootstrap_resamples,
            "bootstrap_seed": self.bootstrap_seed, "solver": self.solver,
            "record_timing": self.record_timing, "output_dir": self.output_dir,
        }

    def validate(self):
        if not self.seeds:
            raise ConfigError("seeds must be a non-empty list")
        if not self.lambdas or min(self.lambdas) < 1:
            raise ConfigError("lambdas must be a non-empty list of noise scales >= 1")
        if "synth" not in self.data and "path" not in self.data:
            raise ConfigError("data needs either a 'synth' block or a 'path'")
        for key in ("path", "adjacency", "bio_synergy", "soc_synergy"):
            if self.data.get(key) is not None and not self.resolve(self.data[key]).exists():
                raise ConfigError(f"data.{key}: path does not exist: {self.resolve(self.data[key])}")
        return self

    def resolve(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def override(self, seed=None, lambdas=None, shots=None, out=None):
        changes = {}
        if seed is not None:
            changes["seeds"] = [seed]
        if lambdas:
            changes["lambdas"] = [float(v) for v in lambdas]
        if shots is not None:
            changes["shots"] = shots
        if out is not None:
            changes["output_dir"] = str(out)
        cfg = replace(self, **changes)
        cfg.validate()
        return cfg

    @property
    def config_hash(self):
        payload = self.to_dict()
        payload.pop("output_dir")
        blob = json.dumps(clean_json(payload), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def experiment_dir(self):
        root = self.output_dir or os.environ.get(OUT_ENV) or "out"
        return Path(root) / self.name

    def load_table(self):
        if "synth" in self.data:
            s = self.data["synth"]
            return synthesize_table(int(s["n"]), int(s["seed"]))
        return load_table(self.resolve(self.data["path"]),
                          *(self.resolve(self.data[k]) if self.data.get(k) else None
                            for k in ("adjacency", "bio_synergy", "soc_synergy")))

    def qaoa_params(self, table):
        q = dict(self.qaoa)
        gamma = q.pop("gamma", None)
        if gamma is None:
            gamma = warm_params(table, self.weights).gamma
        return QaoaParams(gamma=gamma, **q)

    def header(self, command):
        return {"qport_version": __version__, "command": command,
                "config_hash": self.config_hash, "experiment": self.name,
                "seeds": list(self.seeds)}


def write_once(path, text, force=False):
    path = Path(path)
    if path.exists() and not force:
        raise OutputExistsError(f"refusing to overwrite {path} (use --force)")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def derived_seed(*parts):
    """Stable 32-bit seed derived from integers; independent of call order."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


# --- pipeline steps --------------------------------------------------------------

def build(cfg):
    table = cfg.load_table()
    qubo = build_qubo(table, cfg.weights, cfg.k, cfg.penalty_weight, cfg.threshold)
    ising = qubo_to_ising(qubo)
    doc = {"header": cfg.header("build"), "qubo": qubo.to_dict(), "ising": ising.to_dict(),
           "metadata": {"q_max": qubo.scale, "dropped_synergy_terms": qubo.dropped_count,
                        "offdiagonal_nonzeros": qubo.offdiagonal_nonzeros,
                        "constant": qubo.constant}}
    return table, qubo, ising, doc


def solve(cfg, method):
    if method not in SOLVERS:
        raise ConfigError(f"unknown method {method!r}; choose from {', '.join(SOLVERS)}")
    table = cfg.load_table()
    opts = cfg.solver
    results = []
    if method == "greedy":
        results.append(greedy(table, cfg.weights, cfg.k).to_dict(cfg.record_timing))
    elif method == "exact":
        results.append(enumerate_exact(table, cfg.weights, cfg.k).to_dict(cfg.record_timing))
    else:
        for seed in cfg.seeds:
            if method == "sa":
                res = simulated_annealing(
                    table, cfg.weights, cfg.k, opts.get("max_evaluations", 100_000),
                    opts.get("budget_seconds"), seed, opts.get("cooling", 0.995),
                    start="greedy" if opts.get("greedy_start") else None)
            else:
                res = random_search(table, cfg.weights, cfg.k,
                                    opts.get("iterations", 10_000), seed)[0]
            d = res.to_dict(cfg.record_timing)
            if method == "random":
                d["best"] = d["score"]
            if not cfg.record_timing:
                d.pop("evaluations_per_second", None)
            results.append(d)
    scores = [r["score"] for r in results]
    summary = {"mean": float(np.mean(scores)),
               "sd": float(np.std(scores, ddof=1)) if len(scores) > 1 else 0.0}
    return {"header": cfg.header(f"solve:{method}"), "method": method, "k": cfg.k,
            "results": results, "summary": summary}


def _context(cfg):
    table = cfg.load_table()
    check_register(table.n)
    qubo = build_qubo(table, cfg.weights, cfg.k, cfg.penalty_weight, cfg.threshold)
    ising = qubo_to_ising(qubo)
    energies = basis_energies(ising)
    x0 = greedy(table, cfg.weights, cfg.k).portfolio
    return table, qubo, ising, energies, x0


def _feasible_scorer(table, cfg):
    cache = {}

    def score(bitstring):
        if bitstring not in cache:
            x = from_bitstring(bitstring)
            cache[bitstring] = (objective_score(table, cfg.weights, x)
                                if int(x.sum()) == cfg.k else float("nan"))
        return cache[bitstring]

    return score


def _postselected_mean(record, scorer):
    vals = [(scorer(b), c) for b, c in record.counts.items()]
    good = [(v, c) for v, c in vals if not math.isnan(v)]
    total = sum(c for _, c in good)
    return sum(v * c for v, c in good) / total if total else float("nan")


def qaoa(cfg):
    table, qubo, ising, energies, x0 = _context(cfg)
    params = cfg.qaoa_params(table)
    state = run_qaoa(ising, params, x0, energies)
    scorer = _feasible_scorer(table, cfg)
    runs = []
    for seed in cfg.seeds:
        rec = sample_shots(state, cfg.shots, seed)
        mode = mode_bitstring(rec, cfg.k)
        runs.append({
            "seed": seed,
            "expectation_energy": expectation(state, ising, energies),
            "feasible_rate": feasible_shot_rate(rec, cfg.k),
            "mean_feasible_score": _postselected_mean(rec, scorer),
            "mode_bitstring": "".join(map(str, mode[::-1])),
            "mode_score": objective_score(table, cfg.weights, mode),
            "shots": rec.to_dict(),
        })
    return {"header": cfg.header("qaoa"), "params": params.to_dict(),
            "warm_start_score": objective_score(table, cfg.weights, x0), "runs": runs}


def zne_run(cfg, seed, context=None):
    """One full noise-amplified protocol for one seed."""
    table, qubo, ising, energies, x0 = context or _context(cfg)
    params = cfg.qaoa_params(table)
    state = run_qaoa(ising, params, x0, energies)
    ideal = expectation(state, ising, energies)
    scorer = _feasible_scorer(table, cfg)

    records, energy_vals, score_vals, rates = [], [], [], []
    for i, lam in enumerate(cfg.lambdas):
        noise = NoiseConfig(cfg.two_qubit_error, lam, derived_seed(seed, i), cfg.noisy_cost)
        rec = noisy_run(ising, params, x0, noise, cfg.shots, energies)
        records.append(rec)
        idx, cnt = rec.indices()
        energy_vals.append(float(cnt @ energies[idx] / rec.shots))
        score_vals.append(_postselected_mean(rec, scorer))
        rates.append(feasible_shot_rate(rec, cfg.k))

    b, bseed = cfg.bootstrap_resamples, cfg.bootstrap_seed
    energy_est = zne_estimate(cfg.lambdas, energy_vals, records,
                              lambda s: energies[int(s, 2)], b, bseed)
    score_est = zne_estimate(cfg.lambdas, score_vals, records, scorer, b, bseed)
    base = records[int(np.argmin(cfg.lambdas))]
    mode = mode_bitstring(base, cfg.k)
    greedy_x = x0
    quad = score_est.quadratic_e0
    return {
        "seed": seed,
        "noiseless_energy": ideal,
        "mixed_state_energy": ising.offset,
        "per_lambda": [{"lambda": lam, "energy": e, "mean_feasible_score": s,
                        "feasible_rate": r, "noise_seed": rec.seed,
                        "error_trajectories": rec.meta["error_trajectories"]}
                       for lam, e, s, r, rec in zip(cfg.lambdas, energy_vals, score_vals, rates,
                                                    records)],
        "energy_zne": energy_est.to_dict(),
        "score_zne": score_est.to_dict(),
        "mode_portfolio": {"bitstring": "".join(map(str, mode[::-1])),
                           "score": objective_score(table, cfg.weights, mode),
                           "jaccard_vs_greedy": jaccard(mode, greedy_x),
                           "overlap_vs_greedy": overlap_coefficient(mode, greedy_x)},
        "summary": {"raw_score": score_vals[int(np.argmin(cfg.lambdas))],
                    "zne_score": quad if quad is not None else score_est.linear_e0,
                    "valid_rate": rates[int(np.argmin(cfg.lambdas))]},
        "shot_records": [r.to_dict() for r in records],
    }


def zne(cfg):
    context = _context(cfg)
    table, qubo, ising, energies, x0 = context
    return {"header": cfg.header("zne"), "params": cfg.qaoa_params(table).to_dict(),
            "greedy_score": objective_score(table, cfg.weights, x0),
            "lambdas": list(cfg.lambdas), "shots": cfg.shots,
            "two_qubit_error": cfg.two_qubit_error,
            "runs": [zne_run(cfg, seed, context) for seed in cfg.seeds]}


# --- statistics and reports --------------------------------------------------

def _safe(fn, *args, **kwargs):
    try:
        return {"available": True, **fn(*args, **kwargs)}
    except StatsError as exc:
        return {"available": False, "reason": str(exc)}


def _mean_sd(values):
    v = np.asarray([x for x in values if x is not None], dtype=float)
    if v.size == 0:
        return None, None
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else None


def inferential_suite(runs, baseline, b=100, seed=42):
    """Every run-level statistic for a list of :class:`RunSummary`."""
    if not runs:
        raise StatsError("no runs to analyse")
    zne_scores = [r.zne_score for r in runs]
    raw_scores = [r.raw_score for r in runs]
    out = {"n_runs": len(runs), "baseline": baseline}
    out["primary"] = _safe(lambda: compare_to_baseline(zne_scores, baseline).to_dict())
    out["raw_vs_zne"] = _safe(lambda: {
        "mean_diff": (t := paired_t_one_sided(np.subtract(zne_scores, raw_scores), 0.0)).mean_diff,
        "t_stat": t.t_stat, "df": t.df, "p_one_sided": t.p_one_sided, "cohen_d": t.cohen_d})
    out["run_bootstrap_mean_ci95"] = _safe(lambda: {
        "ci95": run_bootstrap_mean(zne_scores, b, seed), "resamples": b, "seed": seed})

    def loo():
        reports = leave_one_out(zne_scores, baseline)
        rows = []
        for run, rep in zip(runs, reports):
            if isinstance(rep, StatsError):
                rows.append({"excluded_run": run.run_id, "available": False, "reason": str(rep)})
            else:
                rows.append({"excluded_run": run.run_id, "mean_score": rep.mean_score,
                             "p_one_sided": rep.p_one_sided, "cohen_d": rep.cohen_d})
        return {"rows": rows}

    out["leave_one_out"] = _safe(loo)
    days = [r.day for r in runs]
    if all(d is not None for d in days):
        out["spearman_day"] = _safe(lambda: dict(zip(("rho", "p_two_sided"),
                                                     spearman(zne_scores, days))))
    else:
        out["spearman_day"] = {"available": False, "reason": "runs carry no execution day"}
    backends = sorted({r.backend for r in runs})
    if len(backends) == 2:
        ga = [r.zne_score for r in runs if r.backend == backends[0]]
        gb = [r.zne_score for r in runs if r.backend == backends[1]]
        out["backend_mann_whitney"] = _safe(lambda: {
            "groups": backends, **dict(zip(("u", "p_two_sided"), mann_whitney_u(ga, gb)))})
    else:
        out["backend_mann_whitney"] = {"available": False,
                                       "reason": f"needs exactly two backends, got {len(backends)}"}
    jac = [r.jaccard for r in runs if r.jaccard is not None]
    out["jaccard_mean"] = float(np.mean(jac)) if jac else None
    out["valid_rate_mean"] = float(np.mean([r.valid_rate for r in runs]))
    return out


def runs_from_zne(doc):
    summaries = []
    for i, run in enumerate(doc["runs"], start=1):
        s = run["summary"]
        summaries.append(RunSummary(i, "statevector", s["raw_score"], s["zne_score"],
                                    s["valid_rate"], run["mode_portfolio"]["jaccard_vs_greedy"]))
    return summaries


def build_report(runs, baseline, methods=None, zne_docs=(), b=100, seed=42, header=None):
    suite = inferential_suite(runs, baseline, b, seed)
    raw_mean, raw_sd = _mean_sd(r.raw_score for r in runs)
    zne_mean, zne_sd = _mean_sd(r.zne_score for r in runs)
    table = [{"method": "greedy", "mean": baseline, "sd": None, "ratio_pct": 100.0,
              "success": None}]
    for name, (mean, sd, scores) in (methods or {}).items():
        table.append({"method": name, "mean": mean, "sd": sd,
                      "ratio_pct": 100 * mean / baseline,
                      "success": f"{sum(s > baseline for s in scores)}/{len(scores)}"})
    table.append({"method": "qaoa_raw", "mean": raw_mean, "sd": raw_sd,
                  "ratio_pct": 100 * raw_mean / baseline,
                  "success": f"{sum(r.raw_score > baseline for r in runs)}/{len(runs)}"})
    table.append({"method": "qaoa_zne", "mean": zne_mean, "sd": zne_sd,
                  "ratio_pct": 100 * zne_mean / baseline,
                  "success": f"{sum(r.zne_score > baseline for r in runs)}/{len(runs)}"})
    run_rows = [{"run_id": r.run_id, "backend": r.backend, "raw_score": r.raw_score,
                 "raw_ratio_pct": 100 * r.raw_score / baseline, "zne_score": r.zne_score,
                 "zne_ratio_pct": 100 * r.zne_score / baseline, "valid_rate": r.valid_rate,
                 "jaccard": r.jaccard, "day": r.day} for r in runs]
    reliability = []
    for model in ("linear", "quadratic", "richardson"):
        e0s, r2s, cis = [], [], []
        for doc in zne_docs:
            for run in doc["runs"]:
                z = run["score_zne"]
                e0s.append(z[model]["e0"])
                if model == "linear":
                    r2s.append(z["linear"]["r2"])
                ci = z["bootstrap"]["ci95"].get(model)
                if ci:
                    cis.append(ci)
        if not e0s or any(v is None for v in e0s):
            reliability.append({"model": model, "available": False})
            continue
        m, s = _mean_sd(e0s)
        r2m, r2s_ = _mean_sd(r2s) if r2s else (None, None)
        reliability.append({"model": model, "available": True, "mean": m, "sd": s,
                            "r2_mean": r2m, "r2_sd": r2s_,
                            "ci95_mean": np.mean(cis, axis=0).tolist() if cis else None})
    return {"header": header or {}, "methods": table, "runs": run_rows,
            "zne_reliability": reliability, "statistics": suite}


def _fmt(v, spec=".2f"):
    return "--" if v is None else format(v, spec)


def render_text(report):
    lines = ["Method comparison", "-" * 62,
             f"{'method':<22}{'mean':>10}{'sd':>10}{'% greedy':>10}{'success':>10}"]
    for row in report["methods"]:
        lines.append(f"{row['method']:<22}{_fmt(row['mean']):>10}{_fmt(row['sd']):>10}"
                     f"{_fmt(row['ratio_pct'], '.1f'):>10}{row['success'] or '--':>10}")
    lines += ["", "Run details", "-" * 62,
              f"{'run':>4} {'backend':<12}{'raw':>9}{'zne':>9}{'valid %':>9}{'jaccard':>9}"]
    for r in report["runs"]:
        jac = None if r["jaccard"] is None else 100 * r["jaccard"]
        lines.append(f"{r['run_id']:>4} {r['backend']:<12}{_fmt(r['raw_score']):>9}"
                     f"{_fmt(r['zne_score']):>9}{_fmt(100 * r['valid_rate'], '.1f'):>9}"
                     f"{_fmt(jac, '.1f'):>9}")
    lines += ["", "ZNE reliability", "-" * 62]
    for row in report["zne_reliability"]:
        if not row["available"]:
            lines.append(f"{row['model']:<12} unavailable")
            continue
        ci = row["ci95_mean"]
        ci_txt = "--" if ci is None else f"[{ci[0]:.2f}, {ci[1]:.2f}]"
        lines.append(f"{row['model']:<12}{_fmt(row['mean']):>9} +- {_fmt(row['sd'])}"
                     f"  R2 {_fmt(row['r2_mean'])}  CI {ci_txt}")
    st = report["statistics"]
    lines += ["", "Inference", "-" * 62]
    p = st["primary"]
    if p["available"]:
        lines.append(f"t({p['df']}) = {p['t_stat']:.2f}, one-sided p = {p['p_one_sided']:.4f}, "
                     f"d = {p['cohen_d']:.2f}, 95% CI [{p['ci95'][0]:.2f}, {p['ci95'][1]:.2f}]")
        lines.append(f"Wilcoxon W = {p['wilcoxon_w']:.0f}, exact one-sided p = "
                     f"{p['wilcoxon_p']:.4f}")
    else:
        lines.append(f"paired t-test unavailable: {p['reason']}")
    for key, label in (("spearman_day", "Spearman vs day"),
                       ("backend_mann_whitney", "Mann-Whitney by backend")):
        s = st[key]
        if not s["available"]:
            lines.append(f"{label}: unavailable ({s['reason']})")
        elif key == "spearman_day":
            lines.append(f"{label}: rho = {s['rho']:.3f}, p = {s['p_two_sided']:.3f}")
        else:
            lines.append(f"{label}: U = {s['u']:.1f}, p = {s['p_two_sided']:.3f}")
    return "\n".join(lines) + "\n"
