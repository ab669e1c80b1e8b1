"""Cost-aware multi-objective Bayesian optimization.

GP surrogates per objective, Chebyshev-scalarized upper confidence bounds, a
time-decaying per-dimension cost penalty on the acquisition, and the metrics
pipeline (Pareto archive, hypervolume, regret) plus a CLI harness.
"""

from .benchmarks import BenchmarkProblem, make_problem
from .costmodel import CostConstraint, CostWeights, cost, sample_weights
from .driver import RunConfig, RunTrace, run, run_repeats
from .gp import GPModel, KernelHyper, fit, optimize_hyperparameters
from .metrics import ParetoArchive, hypervolume_2d, pareto_filter
from .scalarization import chebyshev, sample_theta

__version__ = "0.1.0"

__all__ = [
    "BenchmarkProblem",
    "CostConstraint",
    "CostWeights",
    "GPModel",
    "KernelHyper",
    "ParetoArchive",
    "RunConfig",
    "RunTrace",
    "chebyshev",
    "cost",
    "fit",
    "hypervolume_2d",
    "make_problem",
    "optimize_hyperparameters",
    "pareto_filter",
    "run",
    "run_repeats",
    "sample_theta",
    "sample_weights",
    "__version__",
]
