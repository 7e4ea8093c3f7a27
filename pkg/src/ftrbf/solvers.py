"""The three center-selection trainers: MCP, hard-threshold, and l1 baseline.

All three share the consensus engine and differ only in the penalty applied
during the u-update.  Reported weights come from the sparse iterate u, whose
nonzero pattern is the selected center set.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from . import admm
from .design import DesignMatrix, SmoothObjective, build_regularizer
from .faults import FaultSpec, average_test_error, average_train_error
from .prox import CardinalityPenalty, L1Penalty, McpPenalty

__all__ = [
    "SolverConfig",
    "FitReport",
    "fit",
    "extract_support",
    "refit_on_support",
    "sweep",
]

DEFAULT_ZERO_TOL = 1e-8


@dataclass(frozen=True)
class SolverConfig:
    """Parameters for one trainer run.

    method: "mcp" (needs lam; gamma defaults to 1.001), "ht" (needs k_max),
    or "l1" (needs lam).  ``prox_variant`` selects the exact or unified MCP
    prox.  ``refit`` re-solves the smooth objective on the selected support
    before reporting.
    """

    method: str
    lam: float | None = None
    gamma: float = 1.001
    k_max: int | None = None
    rho_policy: admm.RhoPolicy = field(default_factory=admm.RhoPolicy)
    tol: float = 1e-6
    max_iter: int = 1000
    prox_variant: str = "exact"
    refit: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("mcp", "ht", "l1"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method in ("mcp", "l1") and (self.lam is None or self.lam <= 0):
            raise ValueError(f"method {self.method!r} requires a positive lam")
        if self.method == "mcp" and not self.gamma > 1.0:
            raise ValueError(f"mcp gamma must exceed 1, got {self.gamma}")
        if self.method == "ht" and (self.k_max is None or self.k_max < 0):
            raise ValueError("method 'ht' requires k_max >= 0")
        if self.prox_variant not in ("exact", "unified"):
            raise ValueError(f"unknown prox variant {self.prox_variant!r}")

    def penalty(self):
        if self.method == "mcp":
            return McpPenalty(self.lam, self.gamma, self.prox_variant)
        if self.method == "ht":
            return CardinalityPenalty(self.k_max)
        return L1Penalty(self.lam)

    def param_label(self) -> float:
        """The knob swept for this method: lam for mcp/l1, k_max for ht."""
        return float(self.k_max) if self.method == "ht" else float(self.lam)


@dataclass
class FitReport:
    """Outcome of one fit: sparse weights, selected centers, and errors."""

    weights: np.ndarray
    support: np.ndarray
    n_centers_used: int
    train_error_faulty: float
    test_error_faulty: float | None
    trace: admm.IterationTrace
    converged: bool
    consensus_gap: float
    config: SolverConfig
    rho: float

    def to_json_dict(self, trace_path: str | None = None) -> dict:
        cfg = dataclasses.asdict(self.config)
        return {
            "method": self.config.method,
            "params": cfg,
            "metrics": {
                "train_error_faulty": self.train_error_faulty,
                "test_error_faulty": self.test_error_faulty,
                "n_centers_used": self.n_centers_used,
                "converged": self.converged,
                "consensus_gap": self.consensus_gap,
                "rho": self.rho,
                "iterations": len(self.trace.records),
            },
            "support": [int(i) for i in self.support],
            "trace_file": trace_path,
        }

    def to_json(self, trace_path: str | None = None) -> str:
        return json.dumps(self.to_json_dict(trace_path), indent=2, sort_keys=True)


def extract_support(u, zero_tol: float = DEFAULT_ZERO_TOL) -> np.ndarray:
    """Indices with |u_i| > zero_tol, ascending."""
    if zero_tol < 0.0:
        raise ValueError(f"zero_tol must be >= 0, got {zero_tol}")
    u = np.asarray(u, dtype=np.float64).ravel()
    return np.flatnonzero(np.abs(u) > zero_tol)


def refit_on_support(design: DesignMatrix, y, fault: FaultSpec, support) -> np.ndarray:
    """Minimize the smooth objective restricted to the given center columns.

    Returns a full-length weight vector with zeros off the support.  The
    restricted regularizer is exactly the corresponding submatrix of R.
    """
    support = np.asarray(support, dtype=int).ravel()
    if support.size == 0:
        raise ValueError("refit requires a non-empty support")
    y = np.asarray(y, dtype=np.float64).ravel()
    a_s = design.entries[:, support]
    reg = build_regularizer(design, fault).matrix[np.ix_(support, support)]
    n = design.n_samples
    lhs = (2.0 / n) * (a_s.T @ a_s) + 2.0 * reg
    rhs = (2.0 / n) * (a_s.T @ y)
    try:
        w_s = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"restricted system on support of size {support.size} is singular"
        ) from exc
    w = np.zeros(design.n_centers)
    w[support] = w_s
    return w


def fit(design: DesignMatrix, y, fault: FaultSpec, config: SolverConfig,
        test_design: DesignMatrix | None = None, y_test=None) -> FitReport:
    """Train one center-selecting network and evaluate its faulty errors.

    Test error is filled only when a test design (same centers and width)
    and targets are supplied.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    regularizer = build_regularizer(design, fault)
    obj = SmoothObjective(design, regularizer, y)
    return fit_objective(obj, fault, config, test_design=test_design, y_test=y_test)


def fit_objective(obj: SmoothObjective, fault: FaultSpec, config: SolverConfig,
                  test_design: DesignMatrix | None = None, y_test=None) -> FitReport:
    """Like :func:`fit` but reusing a prebuilt objective (shared factorization
    across methods with the same design, fault level, and rho)."""
    rho = admm.compute_rho(obj, config.rho_policy)
    state, trace = admm.run(obj, config.penalty(), rho,
                            tol=config.tol, max_iter=config.max_iter)

    weights = state.u.copy()
    if config.refit:
        support = extract_support(weights)
        if support.size:
            refitted = refit_on_support(obj.design, obj.targets, fault, support)
            weights = refitted
    support = extract_support(weights)

    test_error = None
    if test_design is not None:
        if y_test is None:
            raise ValueError("test_design supplied without y_test")
        test_error = average_test_error(test_design, y_test, weights, fault)

    return FitReport(
        weights=weights,
        support=support,
        n_centers_used=int(support.size),
        train_error_faulty=average_train_error(obj.design, obj.targets, weights, fault),
        test_error_faulty=test_error,
        trace=trace,
        converged=state.converged,
        consensus_gap=float(np.linalg.norm(state.w - state.u)),
        config=config,
        rho=rho,
    )


def sweep(design: DesignMatrix, y, fault: FaultSpec, base_config: SolverConfig,
          grid, test_design: DesignMatrix | None = None, y_test=None) -> list[FitReport]:
    """One independent fit per parameter override, in the given order.

    ``grid`` is a sequence of dicts applied to ``base_config`` with
    :func:`dataclasses.replace`; the shared objective (and so the Hessian
    eigendecomposition) is built once.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("sweep requires a non-empty grid")
    y = np.asarray(y, dtype=np.float64).ravel()
    obj = SmoothObjective(design, build_regularizer(design, fault), y)
    reports = []
    for overrides in grid:
        cfg = dataclasses.replace(base_config, **overrides)
        reports.append(fit_objective(obj, fault, cfg,
                                     test_design=test_design, y_test=y_test))
    return reports
