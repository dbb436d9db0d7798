"""Command-line entry point: ``qport <command> [options]``.

Commands write JSON records under ``<out>/<experiment name>/`` (``<out>``
defaults to ``$QPORT_OUT_DIR`` or ``./out``) and refuse to overwrite existing
files unless ``--force`` is given. Exit status is 0 on success, 2 on bad input
and 1 on any other failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .classical import InstanceTooLargeError, greedy
from .data import DataError, save_table, synthesize_table
from .experiment import (
    SOLVERS,
    ConfigError,
    ExperimentConfig,
    OutputExistsError,
    build,
    build_report,
    dumps,
    inferential_suite,
    qaoa,
    render_text,
    runs_from_zne,
    solve,
    write_once,
    zne,
)
from .qaoa import SimulatorLimitError
from .stats import StatsError, replay_baseline, reference_runs_path, replay_runs


def _config(args):
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    return cfg.override(seed=getattr(args, "seed", None), lambdas=getattr(args, "lambdas", None),
                        shots=getattr(args, "shots", None), out=args.out)


def _emit(path, doc, force):
    write_once(path, dumps(doc), force)
    print(path)


def cmd_synth(args):
    out = Path(args.out or ".")
    if any((out / f).exists() for f in ("goias_multiobjective.csv", "adjacency.csv")) and not args.force:
        raise OutputExistsError(f"refusing to overwrite the table in {out} (use --force)")
    save_table(synthesize_table(args.n, args.seed), out)
    print(out)


def cmd_build(args):
    cfg = _config(args)
    _, _, _, doc = build(cfg)
    root = cfg.experiment_dir()
    header = doc["header"]
    _emit(root / "qubo.json", {"header": header, **doc["qubo"], "metadata": doc["metadata"]},
          args.force)
    _emit(root / "ising.json", {"header": header, **doc["ising"]}, args.force)


def cmd_solve(args):
    cfg = _config(args)
    _emit(cfg.experiment_dir() / "runs" / f"solve-{args.method}.json", solve(cfg, args.method),
          args.force)


def cmd_qaoa(args):
    cfg = _config(args)
    _emit(cfg.experiment_dir() / "runs" / "qaoa.json", qaoa(cfg), args.force)


def cmd_zne(args):
    cfg = _config(args)
    _emit(cfg.experiment_dir() / "runs" / "zne.json", zne(cfg), args.force)


def _replay(args):
    path = reference_runs_path() if args.replay == "reference" else Path(args.replay)
    if not path.exists():
        raise ConfigError(f"replay file not found: {path}")
    runs = replay_runs(path)
    baseline = args.baseline if args.baseline is not None else replay_baseline(path)
    if baseline is None:
        raise ConfigError(f"{path}: no baseline stored; pass --baseline")
    header = {"qport_version": __version__, "command": "replay",
              "config_hash": hashlib.sha256(path.read_bytes()).hexdigest()[:16],
              "seeds": [args.bootstrap_seed], "source": path.name}
    return runs, baseline, header


def _from_records(cfg):
    root = cfg.experiment_dir() / "runs"
    zne_path = root / "zne.json"
    if not zne_path.exists():
        raise ConfigError(f"no ZNE record at {zne_path}; run 'qport zne' first")
    zdoc = json.loads(zne_path.read_text(encoding="utf-8"))
    baseline = greedy(cfg.load_table(), cfg.weights, cfg.k).score
    methods = {}
    for m in ("sa", "random", "exact"):
        p = root / f"solve-{m}.json"
        if p.exists():
            sdoc = json.loads(p.read_text(encoding="utf-8"))
            scores = [r["score"] for r in sdoc["results"]]
            methods[m] = (sdoc["summary"]["mean"], sdoc["summary"]["sd"] if len(scores) > 1
                          else None, scores)
    return runs_from_zne(zdoc), baseline, methods, [zdoc]


def cmd_stats(args):
    if args.replay:
        runs, baseline, header = _replay(args)
    else:
        cfg = _config(args)
        runs, baseline, _, _ = _from_records(cfg)
        header = cfg.header("stats")
    doc = {"header": header, **inferential_suite(runs, baseline, args.bootstrap_resamples,
                                                 args.bootstrap_seed)}
    if args.out and args.replay:
        _emit(Path(args.out) / "stats.json", doc, args.force)
    else:
        sys.stdout.write(dumps(doc))


def cmd_report(args):
    if args.replay:
        runs, baseline, header = _replay(args)
        methods, zdocs = {}, []
        root = Path(args.out or ".")
    else:
        cfg = _config(args)
        runs, baseline, methods, zdocs = _from_records(cfg)
        header = cfg.header("report")
        root = cfg.experiment_dir()
    report = build_report(runs, baseline, methods, zdocs, args.bootstrap_resamples,
                          args.bootstrap_seed, header)
    _emit(root / "report.json", report, args.force)
    write_once(root / "report.txt", render_text(report), args.force)
    print(root / "report.txt")


def _parser():
    p = argparse.ArgumentParser(prog="qport", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qport {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="experiment JSON file")
        sp.add_argument("--out", help="output root (default: $QPORT_OUT_DIR or ./out)")
        sp.add_argument("--force", action="store_true", help="overwrite existing outputs")

    s = sub.add_parser("synth", help="write a synthetic table")
    s.add_argument("--n", type=int, default=20)
    s.add_argument("--seed", type=int, default=42)
    common(s, config=False)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("build", help="write the QUBO and Ising encodings")
    common(s)
    s.set_defaults(func=cmd_build)

    s = sub.add_parser("solve", help="run a classical solver")
    s.add_argument("--method", choices=SOLVERS, required=True)
    s.add_argument("--seed", type=int)
    common(s)
    s.set_defaults(func=cmd_solve)

    for name, func, help_ in (("qaoa", cmd_qaoa, "noiseless warm-start QAOA"),
                              ("zne", cmd_zne, "noise-amplified runs and extrapolation")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--seed", type=int)
        s.add_argument("--shots", type=int)
        if name == "zne":
            s.add_argument("--lambda", dest="lambdas", type=float, action="append",
                           help="noise scale; repeat for several (default 1 2 3)")
        common(s)
        s.set_defaults(func=func)

    for name, func in (("stats", cmd_stats), ("report", cmd_report)):
        s = sub.add_parser(name, help=f"{name} over ZNE records or replayed runs")
        s.add_argument("--replay", help="run-level JSON file, or 'reference' for the bundled runs")
        s.add_argument("--baseline", type=float, help="baseline score for replayed runs")
        s.add_argument("--bootstrap-resamples", type=int, default=100)
        s.add_argument("--bootstrap-seed", type=int, default=42)
        common(s)
        s.set_defaults(func=func)
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, DataError, StatsError, InstanceTooLargeError, SimulatorLimitError,
            OutputExistsError, ValueError) as exc:
        print(f"qport {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"qport {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
