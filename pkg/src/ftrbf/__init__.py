"""Fault-tolerant RBF regression with sparse center selection.

Trains radial-basis-function networks whose weights survive concurrent
multiplicative noise and open faults, selecting centers through consensus
ADMM with a minimax concave penalty, an exact cardinality constraint solved
by hard thresholding, or an l1 baseline.
"""

__version__ = "0.1.0"

from .admm import RhoPolicy, check_sufficient_decrease, compute_rho, run
from .data import Dataset, SplitSpec, load_delimited, normalize, split, synthetic_sinc, uci_preset
from .design import DesignMatrix, FaultRegularizer, SmoothObjective, build_design, build_regularizer
from .faults import (
    FaultPattern,
    FaultSpec,
    average_test_error,
    average_train_error,
    faulty_weights,
    sample_pattern,
    simulate_faulty_error,
)
from .prox import (
    CardinalityPenalty,
    L1Penalty,
    McpPenalty,
    NoPenalty,
    hard_threshold,
    mcp_penalty,
    mcp_prox_exact,
    mcp_prox_unified,
    soft_threshold,
    vector_prox,
)
from .solvers import FitReport, SolverConfig, extract_support, fit, refit_on_support, sweep

__all__ = [
    "__version__",
    "RhoPolicy", "check_sufficient_decrease", "compute_rho", "run",
    "Dataset", "SplitSpec", "load_delimited", "normalize", "split",
    "synthetic_sinc", "uci_preset",
    "DesignMatrix", "FaultRegularizer", "SmoothObjective",
    "build_design", "build_regularizer",
    "FaultPattern", "FaultSpec", "average_test_error", "average_train_error",
    "faulty_weights", "sample_pattern", "simulate_faulty_error",
    "CardinalityPenalty", "L1Penalty", "McpPenalty", "NoPenalty",
    "hard_threshold", "mcp_penalty", "mcp_prox_exact", "mcp_prox_unified",
    "soft_threshold", "vector_prox",
    "FitReport", "SolverConfig", "extract_support", "fit",
    "refit_on_support", "sweep",
]
