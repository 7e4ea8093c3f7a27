"""Scalar and vector proximal maps for the center-selection penalties.

All scalar operators accept numpy arrays and apply coordinatewise.  The
penalty descriptors at the bottom bundle parameters with their prox and
penalty-value rules so the consensus engine can stay penalty-agnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "soft_threshold",
    "mcp_penalty",
    "mcp_prox_exact",
    "mcp_prox_unified",
    "hard_threshold",
    "vector_prox",
    "NoPenalty",
    "L1Penalty",
    "McpPenalty",
    "CardinalityPenalty",
]

# rho == 1/gamma is decided inside this relative band; exact float equality
# would never trigger.
_RHO_BOUNDARY_RTOL = 1e-12


def soft_threshold(z, eta):
    """sign(z) * max(|z| - eta, 0) with eta >= 0."""
    if np.any(np.asarray(eta) < 0.0):
        raise ValueError("soft threshold requires eta >= 0")
    z = np.asarray(z, dtype=np.float64)
    out = np.sign(z) * np.maximum(np.abs(z) - eta, 0.0)
    return float(out) if out.ndim == 0 else out


def mcp_penalty(w, lam: float, gamma: float):
    """Minimax concave penalty: lam|w| - w^2/(2 gamma) inside |w| <= gamma*lam,
    constant gamma*lam^2/2 beyond."""
    _check_mcp_params(lam, gamma)
    w = np.asarray(w, dtype=np.float64)
    inner = lam * np.abs(w) - w * w / (2.0 * gamma)
    out = np.where(np.abs(w) <= gamma * lam, inner, 0.5 * gamma * lam * lam)
    return float(out) if out.ndim == 0 else out


def _check_mcp_params(lam: float, gamma: float):
    if not lam > 0.0:
        raise ValueError(f"mcp lambda must be positive, got {lam}")
    if not gamma > 1.0:
        raise ValueError(f"mcp gamma must exceed 1, got {gamma}")


def mcp_prox_exact(z, lam: float, gamma: float, rho: float):
    """Exact minimizer of P(u) + (rho/2)(z - u)^2, split on rho vs 1/gamma.

    For rho > 1/gamma the objective is convex piecewise and the scaled soft
    threshold is the interior solution; at or below 1/gamma the inner branch
    is concave, so the minimizer jumps between 0 and the pass-through point.
    """
    _check_mcp_params(lam, gamma)
    if not rho > 0.0:
        raise ValueError(f"rho must be positive, got {rho}")
    z = np.asarray(z, dtype=np.float64)
    inv_gamma = 1.0 / gamma
    if abs(rho - inv_gamma) <= _RHO_BOUNDARY_RTOL * max(rho, inv_gamma):
        out = np.where(np.abs(z) <= gamma * lam, 0.0, z)
    elif rho > inv_gamma:
        scaled = soft_threshold(z, lam / rho) / (1.0 - 1.0 / (gamma * rho))
        out = np.where(np.abs(z) <= gamma * lam, scaled, z)
    else:
        thr = math.sqrt(gamma / rho) * lam
        out = np.where(np.abs(z) <= thr, 0.0, z)
    return float(out) if out.ndim == 0 else out


def mcp_prox_unified(z, lam: float, gamma: float, rho: float):
    """Unified approximate prox: S(z, lam)/(1 - 1/gamma) inside |z| <= gamma*lam.

    Independent of rho; tends to the soft threshold as gamma grows and to a
    hard threshold at lam as gamma approaches 1.
    """
    _check_mcp_params(lam, gamma)
    z = np.asarray(z, dtype=np.float64)
    scaled = soft_threshold(z, lam) / (1.0 - 1.0 / gamma)
    out = np.where(np.abs(z) <= gamma * lam, scaled, z)
    return float(out) if out.ndim == 0 else out


def hard_threshold(z, k: int) -> np.ndarray:
    """Keep the k largest-magnitude entries (ties: lowest index), zero the rest.

    This is the Euclidean projection onto the set of vectors with at most k
    nonzeros.
    """
    z = np.asarray(z, dtype=np.float64).ravel()
    if k < 0 or k > z.size:
        raise ValueError(f"k must lie in [0, {z.size}], got {k}")
    out = np.zeros_like(z)
    if k == 0:
        return out
    order = np.argsort(-np.abs(z), kind="stable")
    keep = order[:k]
    out[keep] = z[keep]
    return out


@dataclass(frozen=True)
class NoPenalty:
    """g(u) = 0; prox is the identity."""

    def prox(self, z, rho: float) -> np.ndarray:
        return np.asarray(z, dtype=np.float64).copy()

    def value(self, u) -> float:
        return 0.0


@dataclass(frozen=True)
class L1Penalty:
    """g(u) = lam * ||u||_1."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0.0:
            raise ValueError(f"l1 lambda must be positive, got {self.lam}")

    def prox(self, z, rho: float) -> np.ndarray:
        return soft_threshold(z, self.lam / rho)

    def value(self, u) -> float:
        return float(self.lam * np.sum(np.abs(u)))


@dataclass(frozen=True)
class McpPenalty:
    """g(u) = sum_i P(u_i) with the minimax concave penalty P.

    variant "exact" uses the case-split prox; "unified" uses the rho-free
    approximation.
    """

    lam: float
    gamma: float
    variant: str = "exact"

    def __post_init__(self):
        _check_mcp_params(self.lam, self.gamma)
        if self.variant not in ("exact", "unified"):
            raise ValueError(f"unknown mcp prox variant {self.variant!r}")

    def prox(self, z, rho: float) -> np.ndarray:
        if self.variant == "exact":
            return np.asarray(mcp_prox_exact(z, self.lam, self.gamma, rho))
        return np.asarray(mcp_prox_unified(z, self.lam, self.gamma, rho))

    def value(self, u) -> float:
        return float(np.sum(mcp_penalty(u, self.lam, self.gamma)))


@dataclass(frozen=True)
class CardinalityPenalty:
    """Indicator of {u : ||u||_0 <= k}; prox is the hard-threshold projection."""

    k: int

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"cardinality bound must be >= 0, got {self.k}")

    def prox(self, z, rho: float) -> np.ndarray:
        return hard_threshold(z, self.k)

    def value(self, u) -> float:
        return 0.0 if np.count_nonzero(u) <= self.k else math.inf


def vector_prox(z, penalty, rho: float) -> np.ndarray:
    """Coordinatewise prox of the given penalty descriptor at parameter rho."""
    if not isinstance(penalty, (NoPenalty, L1Penalty, McpPenalty, CardinalityPenalty)):
        raise TypeError(f"unknown penalty descriptor: {penalty!r}")
    if not rho > 0.0:
        raise ValueError(f"rho must be positive, got {rho}")
    return penalty.prox(np.asarray(z, dtype=np.float64), rho)
