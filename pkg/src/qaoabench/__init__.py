"""QAOA/QUBO optimizer benchmark harness.

Weighted MAX-CUT / QUBO problems evaluated on a simulated QAOA circuit
(exact statevector, finite measurement shots, or a depolarizing + readout
noise model), optimized by DARBO (trust-region Bayesian optimization with
an adaptive search region) and by SPSA / Nelder-Mead / finite-difference
Adam baselines.  Readout-error mitigation and zero-noise extrapolation are
available for the noisy mode.
"""

from qaoabench.problem import (
    BruteForceResult,
    QuboProblem,
    WeightedGraph,
    approximation_ratio,
    brute_force_optimum,
    cut_from_expectation,
    five_variable_qubo,
    generate_w3r,
    qubo_value,
)
from qaoabench.simulator import (
    QaoaParams,
    ShotSample,
    Statevector,
    build_state,
    exact_expectation,
    sample_bitstrings,
    shot_estimate,
    success_ratio,
)
from qaoabench.noise_sim import FoldFactor, NoiseModel, ReadoutError, build_noisy_state, noisy_expectation
from qaoabench.mitigation import ConfusionSpec, learn_confusion, mitigate_readout, zne_extrapolate
from qaoabench.surrogate import GpModel, KernelParams, fit, log_marginal_likelihood, matern52, predict
from qaoabench.darbo import DarboConfig, darbo_minimize
from qaoabench.baselines import (
    AdamFdConfig,
    NelderMeadConfig,
    OptimizerTrace,
    SpsaConfig,
    adam_fd_minimize,
    nelder_mead_minimize,
    spsa_minimize,
)
from qaoabench.harness import Evaluator, ModeConfig, RunConfig, run_experiment, success_report

__all__ = [
    "WeightedGraph",
    "QuboProblem",
    "BruteForceResult",
    "five_variable_qubo",
    "generate_w3r",
    "qubo_value",
    "brute_force_optimum",
    "cut_from_expectation",
    "approximation_ratio",
    "QaoaParams",
    "Statevector",
    "ShotSample",
    "build_state",
    "exact_expectation",
    "sample_bitstrings",
    "shot_estimate",
    "success_ratio",
    "NoiseModel",
    "ReadoutError",
    "FoldFactor",
    "build_noisy_state",
    "noisy_expectation",
    "ConfusionSpec",
    "learn_confusion",
    "mitigate_readout",
    "zne_extrapolate",
    "KernelParams",
    "GpModel",
    "matern52",
    "fit",
    "predict",
    "log_marginal_likelihood",
    "DarboConfig",
    "darbo_minimize",
    "OptimizerTrace",
    "SpsaConfig",
    "NelderMeadConfig",
    "AdamFdConfig",
    "spsa_minimize",
    "nelder_mead_minimize",
    "adam_fd_minimize",
    "ModeConfig",
    "RunConfig",
    "Evaluator",
    "run_experiment",
    "success_report",
]

__version__ = "0.1.0"
