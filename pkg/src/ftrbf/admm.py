"""Consensus ADMM engine for min psi(w) + g(u) subject to u = w.

Iteration order per step k: u-update (prox of g at w^k - ups^k/rho), then the
prefactorized w-update, then dual ascent with step rho.  This order makes the
identity grad psi(w^{k+1}) = ups^{k+1} hold exactly, which the convergence
monitors rely on.  Iterates start from w = u = 0 with the dual at
grad psi(0), so the identity (and with it the sufficient-decrease bound)
already holds at the starting point.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .design import SmoothObjective
from .prox import McpPenalty

__all__ = [
    "RhoPolicy",
    "AdmmState",
    "TraceRecord",
    "IterationTrace",
    "AdmmDivergence",
    "compute_rho",
    "w_update",
    "dual_update",
    "augmented_lagrangian",
    "run",
    "check_sufficient_decrease",
]

# Additive slack when checking the per-iteration Lagrangian drop; float
# cancellation makes exact comparisons meaningless.
_DECREASE_SLACK = 1e-10


@dataclass(frozen=True)
class RhoPolicy:
    """Penalty-parameter policy.

    auto: rho = safety * max(2 l_psi^2 / a, l_psi), the smallest value for
    which both the sufficient-decrease and boundedness arguments go through.
    fixed: use ``value`` as given.
    """

    mode: str = "auto"
    value: float = 0.0
    safety: float = 1.1

    def __post_init__(self):
        if self.mode not in ("auto", "fixed"):
            raise ValueError(f"unknown rho mode {self.mode!r}")
        if self.mode == "fixed" and not self.value > 0.0:
            raise ValueError(f"fixed rho must be positive, got {self.value}")
        if self.mode == "auto" and self.safety < 1.0:
            raise ValueError(f"rho safety factor must be >= 1, got {self.safety}")


@dataclass
class AdmmState:
    """Iterate triple plus bookkeeping; ``lagrangian`` is the augmented
    Lagrangian value at (w, u, upsilon)."""

    w: np.ndarray
    u: np.ndarray
    upsilon: np.ndarray
    iter: int
    lagrangian: float
    converged: bool = False


@dataclass(frozen=True)
class TraceRecord:
    iter: int
    lagrangian: float
    primal_residual: float
    dual_residual: float
    psi_value: float
    support_size: int
    sd_slack: float


@dataclass
class IterationTrace:
    """Per-iteration diagnostics; one record per executed iteration.

    ``w_steps`` keeps the weight snapshots w^0 .. w^K (one more entry than
    records) so the sufficient-decrease condition can be re-verified after
    the run.
    """

    rho: float
    tau1: float
    initial_lagrangian: float
    records: list[TraceRecord] = field(default_factory=list)
    w_steps: list[np.ndarray] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    CSV_FIELDS = ("iter", "lagrangian", "primal_res", "dual_res", "psi",
                  "support_size", "sd_slack")

    def rows(self):
        for r in self.records:
            yield (r.iter, r.lagrangian, r.primal_residual, r.dual_residual,
                   r.psi_value, r.support_size, r.sd_slack)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.CSV_FIELDS)
            for row in self.rows():
                writer.writerow([str(v) for v in row])


class AdmmDivergence(RuntimeError):
    """Raised when an iterate stops being finite; carries the trace so far."""

    def __init__(self, message: str, trace: IterationTrace):
        super().__init__(message)
        self.trace = trace


def compute_rho(obj: SmoothObjective, policy: RhoPolicy) -> float:
    """Resolve the penalty parameter for an objective under the given policy."""
    if policy.mode == "fixed":
        return float(policy.value)
    l_psi, a = obj.curvature_bounds()
    return float(policy.safety * max(2.0 * l_psi * l_psi / a, l_psi))


def w_update(obj: SmoothObjective, u, upsilon, rho: float) -> np.ndarray:
    """Minimize the Lagrangian over w: solve (H + rho I) w = (2/N) A^T y
    + rho u + upsilon via the objective's cached factorization."""
    rhs = (2.0 / obj.n_samples) * obj.cross + rho * np.asarray(u) + np.asarray(upsilon)
    return obj.solve_shifted(rho, rhs)


def dual_update(upsilon, u_next, w_next, rho: float) -> np.ndarray:
    """Dual ascent with step rho: upsilon + rho (u - w)."""
    upsilon = np.asarray(upsilon, dtype=np.float64)
    u_next = np.asarray(u_next, dtype=np.float64)
    w_next = np.asarray(w_next, dtype=np.float64)
    if not upsilon.shape == u_next.shape == w_next.shape:
        raise ValueError("dual update length mismatch")
    return upsilon + rho * (u_next - w_next)


def augmented_lagrangian(obj: SmoothObjective, penalty, state: AdmmState,
                         rho: float) -> float:
    """psi(w) + g(u) + upsilon^T (u - w) + (rho/2) ||w - u||^2.

    Returns +inf when u is infeasible for an indicator penalty.
    """
    return _lagrangian(obj, penalty, state.w, state.u, state.upsilon, rho)


def _lagrangian(obj, penalty, w, u, upsilon, rho):
    g = penalty.value(u)
    if math.isinf(g):
        return math.inf
    diff = u - w
    return obj.psi(w) + g + float(upsilon @ diff) + 0.5 * rho * float(diff @ diff)


def run(obj: SmoothObjective, penalty, rho: float, tol: float = 1e-6,
        max_iter: int = 1000, keep_weights: bool = True):
    """Iterate ADMM from zero until max(primal, dual) residual < tol or
    ``max_iter`` steps.  Returns (final AdmmState, IterationTrace).

    primal residual: ||u^{k+1} - w^{k+1}||_2
    dual residual:   rho * ||u^{k+1} - u^k||_2
    """
    if not rho > 0.0:
        raise ValueError(f"rho must be positive, got {rho}")
    if not tol > 0.0 or max_iter < 1:
        raise ValueError("tol must be positive and max_iter >= 1")

    m = obj.n_centers
    w = np.zeros(m)
    u = np.zeros(m)
    # starting the dual at grad psi(w0) makes the identity
    # grad psi(w^k) = ups^k hold from k = 0, so the per-iteration Lagrangian
    # drop is guaranteed on the very first step as well
    ups = obj.psi_gradient(w)

    l_psi, a = obj.curvature_bounds()
    tau1 = a / 2.0 - l_psi * l_psi / rho

    lag = _lagrangian(obj, penalty, w, u, ups, rho)
    trace = IterationTrace(rho=rho, tau1=tau1, initial_lagrangian=lag)
    if keep_weights:
        trace.w_steps.append(w.copy())
    if isinstance(penalty, McpPenalty) and penalty.variant == "exact":
        denom = 1.0 - 1.0 / (penalty.gamma * rho)
        if 0.0 < denom < 1e-8:
            trace.notes.append(
                f"mcp prox denominator 1 - 1/(gamma*rho) = {denom:.3e} is "
                f"ill-conditioned"
            )

    converged = False
    for k in range(1, max_iter + 1):
        u_next = penalty.prox(w - ups / rho, rho)
        w_next = w_update(obj, u_next, ups, rho)
        ups_next = dual_update(ups, u_next, w_next, rho)

        primal = float(np.linalg.norm(u_next - w_next))
        dual = float(rho * np.linalg.norm(u_next - u))
        lag_next = _lagrangian(obj, penalty, w_next, u_next, ups_next, rho)
        dw = w_next - w
        slack = lag_next - lag + tau1 * float(dw @ dw)
        trace.records.append(TraceRecord(
            iter=k,
            lagrangian=lag_next,
            primal_residual=primal,
            dual_residual=dual,
            psi_value=obj.psi(w_next),
            support_size=int(np.count_nonzero(u_next)),
            sd_slack=slack,
        ))
        if keep_weights:
            trace.w_steps.append(w_next.copy())

        w, u, ups, lag = w_next, u_next, ups_next, lag_next
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(u))
                and np.all(np.isfinite(ups)) and math.isfinite(lag)):
            raise AdmmDivergence(
                f"non-finite iterate at iteration {k} (rho={rho:.3e})", trace)
        if max(primal, dual) < tol:
            converged = True
            break

    state = AdmmState(w=w, u=u, upsilon=ups, iter=len(trace.records),
                      lagrangian=lag, converged=converged)
    return state, trace


def check_sufficient_decrease(trace: IterationTrace, tau1: float | None = None):
    """Verify L^{k+1} - L^k <= -tau1 ||w^{k+1} - w^k||^2 across the trace.

    Returns (ok, first_violation_index); the index counts iterations from 1
    and is None when the condition holds everywhere.  Requires the trace to
    carry weight snapshots.
    """
    if len(trace.records) < 1 or len(trace.w_steps) != len(trace.records) + 1:
        raise ValueError("trace lacks consecutive weight snapshots")
    if tau1 is None:
        tau1 = trace.tau1
    lag_prev = trace.initial_lagrangian
    for i, rec in enumerate(trace.records):
        dw = trace.w_steps[i + 1] - trace.w_steps[i]
        if rec.lagrangian - lag_prev > -tau1 * float(dw @ dw) + _DECREASE_SLACK:
            return False, rec.iter
        lag_prev = rec.lagrangian
    return True, None
