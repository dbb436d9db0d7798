"""Cardinality-constrained portfolio selection over municipalities: QUBO/Ising
encodings, a warm-started XY-mixer QAOA simulator with zero-noise
extrapolation, classical baselines and small-sample statistics."""

__version__ = "0.1.0"

from .classical import (  # noqa: E402
    AnnealingSelector,
    ExhaustiveSelector,
    GreedySelector,
    RandomSearchSelector,
    enumerate_exact,
    greedy,
    random_search,
    simulated_annealing,
)
from .data import MunicipalityTable, load_table, save_table, synthesize_table  # noqa: E402
from .ising import IsingModel, ising_energy, qubo_to_ising  # noqa: E402
from .noise_zne import NoiseConfig, ZeroNoiseExtrapolator, noisy_run, zne_estimate  # noqa: E402
from .qaoa import QaoaParams, WarmStartQAOA, run_qaoa, sample_shots  # noqa: E402
from .qubo import ObjectiveWeights, QuboEncoder, build_qubo, objective_score  # noqa: E402
from .stats import compare_to_baseline  # noqa: E402

__all__ = [
    "AnnealingSelector", "ExhaustiveSelector", "GreedySelector", "IsingModel",
    "MunicipalityTable", "NoiseConfig", "ObjectiveWeights", "QaoaParams", "QuboEncoder",
    "RandomSearchSelector", "WarmStartQAOA", "ZeroNoiseExtrapolator", "build_qubo",
    "compare_to_baseline", "enumerate_exact", "greedy", "ising_energy", "load_table",
    "noisy_run", "objective_score", "qubo_to_ising", "random_search", "run_qaoa",
    "sample_shots", "save_table", "simulated_annealing", "synthesize_table", "zne_estimate",
]
