"""Concurrent weight-fault model: sampling, injection, and averaged errors.

A stored weight w_j degrades to (w_j + b_j w_j) * beta_j where b_j is
zero-mean multiplicative noise with variance ``mult_var`` and beta_j is 0
with probability ``open_prob`` (open connection), 1 otherwise.  Because the
fault statistics enter the expected squared error only through second
moments, the expectation over all fault patterns has a closed form; the
Monte-Carlo injector here exists to validate that closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FaultSpec",
    "FaultPattern",
    "sample_pattern",
    "faulty_weights",
    "average_train_error",
    "average_test_error",
    "simulate_faulty_error",
]

_MC_BATCH = 2048


@dataclass(frozen=True)
class FaultSpec:
    """open_prob: probability a weight line is severed, in [0, 1).
    mult_var: variance of the zero-mean relative weight noise, >= 0."""

    open_prob: float = 0.0
    mult_var: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.open_prob < 1.0:
            raise ValueError(f"open_prob must lie in [0, 1), got {self.open_prob}")
        if self.mult_var < 0.0:
            raise ValueError(f"mult_var must be >= 0, got {self.mult_var}")


@dataclass(frozen=True)
class FaultPattern:
    """One realization: relative noise per weight and a 0/1 connection mask."""

    mult_noise: np.ndarray
    open_mask: np.ndarray


def sample_pattern(fault: FaultSpec, m: int, rng_seed: int) -> FaultPattern:
    """Draw one fault pattern for m weights.

    Noise is Gaussian(0, mult_var): the averaged-error formulas depend only
    on the first two moments, so any zero-mean law with the right variance
    would validate them equally.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rng = np.random.default_rng(rng_seed)
    b = rng.normal(0.0, np.sqrt(fault.mult_var), size=m)
    beta = (rng.random(m) >= fault.open_prob).astype(np.float64)
    return FaultPattern(mult_noise=b, open_mask=beta)


def faulty_weights(w, pattern: FaultPattern) -> np.ndarray:
    """Apply a fault pattern: (w_j + b_j w_j) * beta_j."""
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.shape != pattern.mult_noise.shape or w.shape != pattern.open_mask.shape:
        raise ValueError("weight/pattern length mismatch")
    return (w + pattern.mult_noise * w) * pattern.open_mask


def _averaged_error(entries, gram, y, w, fault: FaultSpec) -> float:
    p, v = fault.open_prob, fault.mult_var
    n = entries.shape[0]
    resid = y - entries @ w
    quad = (p + v) * float((w * w) @ np.diag(gram)) - p * float(w @ (gram @ w))
    return float(
        p / n * float(y @ y)
        + (1.0 - p) / n * float(resid @ resid)
        + (1.0 - p) / n * quad
    )


def average_train_error(design, y, w, fault: FaultSpec) -> float:
    """Training error averaged in closed form over all fault patterns."""
    y = np.asarray(y, dtype=np.float64).ravel()
    w = np.asarray(w, dtype=np.float64).ravel()
    if y.shape[0] != design.n_samples:
        raise ValueError(f"targets have length {y.shape[0]}, expected {design.n_samples}")
    if w.shape[0] != design.n_centers:
        raise ValueError(f"weights have length {w.shape[0]}, expected {design.n_centers}")
    return _averaged_error(design.entries, design.gram, y, w, fault)


def average_test_error(test_design, y_test, w, fault: FaultSpec) -> float:
    """Closed-form fault-averaged error on a held-out set.

    ``test_design`` must have been built with the same centers and width as
    the training design; only the sample rows differ.
    """
    y = np.asarray(y_test, dtype=np.float64).ravel()
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.shape[0] != test_design.n_centers:
        raise ValueError(
            f"weights have length {w.shape[0]} but test design has "
            f"{test_design.n_centers} centers"
        )
    if y.shape[0] != test_design.n_samples:
        raise ValueError(f"targets have length {y.shape[0]}, expected {test_design.n_samples}")
    return _averaged_error(test_design.entries, test_design.gram, y, w, fault)


def simulate_faulty_error(design, y, w, fault: FaultSpec, n_samples: int,
                          rng_seed: int) -> tuple[float, float]:
    """Monte-Carlo mean of (1/N)||y - A w~||^2 over independent fault draws.

    Returns (mean, standard error of the mean).  Used as the independent
    check of :func:`average_train_error`.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    y = np.asarray(y, dtype=np.float64).ravel()
    w = np.asarray(w, dtype=np.float64).ravel()
    if y.shape[0] != design.n_samples:
        raise ValueError(f"targets have length {y.shape[0]}, expected {design.n_samples}")
    if w.shape[0] != design.n_centers:
        raise ValueError(f"weights have length {w.shape[0]}, expected {design.n_centers}")

    rng = np.random.default_rng(rng_seed)
    n = design.n_samples
    sigma = np.sqrt(fault.mult_var)
    # shifted-data accumulation: exact zero spread for degenerate draws
    shift = None
    sum_d = 0.0
    sum_d2 = 0.0
    done = 0
    while done < n_samples:
        batch = min(_MC_BATCH, n_samples - done)
        b = rng.normal(0.0, sigma, size=(batch, w.shape[0]))
        beta = (rng.random((batch, w.shape[0])) >= fault.open_prob).astype(np.float64)
        wt = (w + b * w) * beta
        resid = y[None, :] - wt @ design.entries.T
        errs = np.einsum("ij,ij->i", resid, resid) / n
        if shift is None:
            shift = float(errs[0])
        d = errs - shift
        sum_d += float(d.sum())
        sum_d2 += float((d * d).sum())
        done += batch

    mean = shift + sum_d / n_samples
    if n_samples == 1:
        return mean, 0.0
    var = max(sum_d2 - sum_d * sum_d / n_samples, 0.0) / (n_samples - 1)
    return mean, float(np.sqrt(var / n_samples))
