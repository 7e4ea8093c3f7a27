"""Gaussian design matrix, fault regularizer, and the smooth training objective.

The training objective is

    psi(w) = (1/N) ||y - A w||^2 + w^T R w

where A holds the Gaussian kernel evaluations and R is the regularizer that
makes psi equal (up to a constant) to the training error averaged over
concurrent weight faults.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "DesignMatrix",
    "FaultRegularizer",
    "SmoothObjective",
    "build_design",
    "build_regularizer",
]

# Rows of the kernel matrix are computed in blocks so the (N, M, K) distance
# tensor never materializes for large N*M.
_DIST_BLOCK_ROWS = 256


@dataclass(frozen=True)
class DesignMatrix:
    """Kernel evaluations A (N x M) with cached Gram products.

    entries[i, j] = exp(-||x_i - c_j||^2 / width); every entry lies in (0, 1].
    ``cross`` is A^T y when targets were supplied at build time, else None.
    """

    entries: np.ndarray
    gram: np.ndarray
    cross: np.ndarray | None
    n_samples: int
    n_centers: int
    width: float


@dataclass(frozen=True)
class FaultRegularizer:
    """Quadratic-form matrix R of the fault-averaged objective.

    R = (p + v) * diag(A^T A) / N - (p / N) * A^T A  for open-fault
    probability p and multiplicative noise variance v.
    """

    matrix: np.ndarray
    open_prob: float
    mult_var: float


def build_design(inputs, centers, width, targets=None) -> DesignMatrix:
    """Evaluate the Gaussian kernel design matrix and cache A^T A (and A^T y).

    inputs:  (N, K) sample matrix.
    centers: (M, K) center matrix, same feature dimension.
    width:   positive kernel width s in exp(-d^2 / s).
    targets: optional (N,) vector; when given, A^T y is cached on the result.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    c = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    if x.ndim != 2 or c.ndim != 2:
        raise ValueError("inputs and centers must be 2-d arrays")
    if x.shape[1] != c.shape[1]:
        raise ValueError(
            f"feature dimension mismatch: inputs have {x.shape[1]}, "
            f"centers have {c.shape[1]}"
        )
    width = float(width)
    if not width > 0.0:
        raise ValueError(f"width must be positive, got {width}")

    n, m = x.shape[0], c.shape[0]
    entries = np.empty((n, m), dtype=np.float64)
    for lo in range(0, n, _DIST_BLOCK_ROWS):
        hi = min(lo + _DIST_BLOCK_ROWS, n)
        diff = x[lo:hi, None, :] - c[None, :, :]
        sqdist = np.einsum("ijk,ijk->ij", diff, diff)
        entries[lo:hi] = np.exp(-sqdist / width)

    cross = None
    if targets is not None:
        y = np.asarray(targets, dtype=np.float64).ravel()
        if y.shape[0] != n:
            raise ValueError(f"targets have length {y.shape[0]}, expected {n}")
        cross = entries.T @ y

    return DesignMatrix(
        entries=entries,
        gram=entries.T @ entries,
        cross=cross,
        n_samples=n,
        n_centers=m,
        width=width,
    )


def build_regularizer(design: DesignMatrix, fault) -> FaultRegularizer:
    """Assemble R from the design Gram matrix and a fault specification."""
    p = float(fault.open_prob)
    v = float(fault.mult_var)
    if not 0.0 <= p < 1.0:
        raise ValueError(f"open-fault probability must lie in [0, 1), got {p}")
    if v < 0.0:
        raise ValueError(f"multiplicative noise variance must be >= 0, got {v}")
    g = design.gram
    n = design.n_samples
    r = (p + v) * np.diag(np.diag(g)) / n - (p / n) * g
    return FaultRegularizer(matrix=r, open_prob=p, mult_var=v)


class SmoothObjective:
    """psi(w) = (1/N) ||y - A w||^2 + w^T R w with cached solver state.

    The Hessian (2/N) A^T A + 2 R, its extreme eigenvalues, and the Cholesky
    factorization of H + rho*I are computed once and reused: the consensus
    solvers call the same linear solve every iteration.  Instances are
    immutable apart from these internal caches and safe to share across
    concurrent solver runs.
    """

    def __init__(self, design: DesignMatrix, regularizer: FaultRegularizer, targets):
        y = np.asarray(targets, dtype=np.float64).ravel()
        if y.shape[0] != design.n_samples:
            raise ValueError(
                f"targets have length {y.shape[0]}, expected {design.n_samples}"
            )
        if regularizer.matrix.shape != (design.n_centers, design.n_centers):
            raise ValueError("regularizer shape does not match design")
        self.design = design
        self.regularizer = regularizer
        self.targets = y
        self.n_samples = design.n_samples
        self.n_centers = design.n_centers
        self.cross = design.entries.T @ y
        self._hessian = None
        self._bounds = None
        self._factors = {}

    def _check_len(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=np.float64).ravel()
        if w.shape[0] != self.n_centers:
            raise ValueError(f"weight vector has length {w.shape[0]}, expected {self.n_centers}")
        return w

    def psi(self, w) -> float:
        w = self._check_len(w)
        resid = self.targets - self.design.entries @ w
        return float(resid @ resid / self.n_samples + w @ (self.regularizer.matrix @ w))

    def psi_gradient(self, w) -> np.ndarray:
        w = self._check_len(w)
        resid = self.targets - self.design.entries @ w
        return (-2.0 / self.n_samples) * (self.design.entries.T @ resid) \
            + 2.0 * (self.regularizer.matrix @ w)

    def hessian(self) -> np.ndarray:
        if self._hessian is None:
            self._hessian = (2.0 / self.n_samples) * self.design.gram \
                + 2.0 * self.regularizer.matrix
        return self._hessian

    def curvature_bounds(self) -> tuple[float, float]:
        """Extreme Hessian eigenvalues (l_psi, a): gradient Lipschitz constant
        and strong-convexity modulus.  Raises if the Hessian is not positive
        definite."""
        if self._bounds is None:
            eig = np.linalg.eigvalsh(self.hessian())
            if eig[0] <= 0.0:
                raise ValueError(
                    f"objective Hessian is not positive definite "
                    f"(smallest eigenvalue {eig[0]:.3e})"
                )
            self._bounds = (float(eig[-1]), float(eig[0]))
        return self._bounds

    def factorization(self, rho: float):
        """Cached Cholesky factorization of H + rho*I, one per rho value."""
        key = float(rho)
        if key not in self._factors:
            h = self.hessian() + key * np.eye(self.n_centers)
            self._factors[key] = cho_factor(h, check_finite=False)
        return self._factors[key]

    def solve_shifted(self, rho: float, rhs) -> np.ndarray:
        """Solve (H + rho*I) x = rhs via the cached factorization."""
        return cho_solve(self.factorization(rho), rhs, check_finite=False)
