import itertools

import numpy as np
import pytest

from ftrbf.prox import (
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


def prox_objective(u, z, lam, gamma, rho):
    return mcp_penalty(u, lam, gamma) + 0.5 * rho * (z - u) ** 2


def grid_prox_minimizer(z, lam, gamma, rho, step=1e-4):
    """Brute-force scalar prox oracle over [-|z|-gamma*lam, |z|+gamma*lam]."""
    half = abs(z) + gamma * lam
    grid = np.arange(-half, half + step, step)
    vals = prox_objective(grid, z, lam, gamma, rho)
    i = int(np.argmin(vals))
    return float(grid[i]), float(vals[i])


def sample_prox_tuples(rng, count):
    lam = np.exp(rng.uniform(np.log(0.1), np.log(5.0), size=count))
    gamma = np.exp(rng.uniform(np.log(1.01), np.log(10.0), size=count))
    rho = np.exp(rng.uniform(np.log(0.05), np.log(20.0), size=count))
    z = rng.uniform(-1.0, 1.0, size=count) * (gamma * lam + 2.0)
    return z, lam, gamma, rho


class TestSoftThreshold:
    def test_hand_values(self):
        assert soft_threshold(3.0, 1.0) == 2.0
        assert soft_threshold(-0.5, 1.0) == 0.0
        assert soft_threshold(-2.0, 0.5) == -1.5

    def test_negative_eta_rejected(self):
        with pytest.raises(ValueError):
            soft_threshold(1.0, -0.1)

    def test_odd(self, rng):
        z = rng.normal(size=100, scale=3.0)
        assert np.allclose(soft_threshold(-z, 0.7), -soft_threshold(z, 0.7))

    def test_nonexpansive(self, rng):
        for _ in range(200):
            z1, z2 = rng.normal(size=2, scale=5.0)
            eta = rng.uniform(0.0, 3.0)
            assert abs(soft_threshold(z1, eta) - soft_threshold(z2, eta)) \
                <= abs(z1 - z2) + 1e-15


class TestMcpPenalty:
    def test_zero(self):
        assert mcp_penalty(0.0, 1.0, 2.0) == 0.0

    def test_plateau(self):
        assert mcp_penalty(5.0, 1.0, 2.0) == pytest.approx(1.0)

    def test_inner_hand_value(self):
        assert mcp_penalty(1.0, 1.0, 2.0) == pytest.approx(0.75)

    def test_continuous_at_knee(self):
        lam, gamma = 0.8, 3.0
        knee = gamma * lam
        inner = mcp_penalty(knee * (1 - 1e-12), lam, gamma)
        outer = mcp_penalty(knee * (1 + 1e-12), lam, gamma)
        assert inner == pytest.approx(outer, rel=1e-9)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            mcp_penalty(1.0, 0.0, 2.0)
        with pytest.raises(ValueError):
            mcp_penalty(1.0, 1.0, 1.0)


class TestMcpProxExact:
    def test_scaled_soft_threshold_case(self):
        # rho=1 > 1/gamma=0.5: S(1.5, 1)/(1 - 1/2) = 1.0; grid oracle agrees
        assert mcp_prox_exact(1.5, 1.0, 2.0, 1.0) == pytest.approx(1.0)
        u_star, _ = grid_prox_minimizer(1.5, 1.0, 2.0, 1.0)
        assert u_star == pytest.approx(1.0, abs=1e-3)

    def test_plateau_pass_through(self):
        for rho in (0.25, 0.5, 1.0, 7.0):
            assert mcp_prox_exact(10.0, 1.0, 2.0, rho) == 10.0

    def test_small_rho_zeroes_below_threshold(self):
        # rho=0.25 < 1/gamma: threshold sqrt(gamma/rho)*lam = sqrt(8)
        assert mcp_prox_exact(2.0, 1.0, 2.0, 0.25) == 0.0
        u_star, v_star = grid_prox_minimizer(2.0, 1.0, 2.0, 0.25)
        assert v_star >= prox_objective(0.0, 2.0, 1.0, 2.0, 0.25) - 1e-9
        assert mcp_prox_exact(3.0, 1.0, 2.0, 0.25) == 3.0

    def test_boundary_rho_equals_inverse_gamma(self):
        lam, gamma = 1.0, 2.0
        rho = 1.0 / gamma
        assert mcp_prox_exact(1.9, lam, gamma, rho) == 0.0
        assert mcp_prox_exact(2.1, lam, gamma, rho) == 2.1
        # tiny perturbations inside the detection band behave identically
        assert mcp_prox_exact(1.9, lam, gamma, rho * (1 + 1e-13)) == 0.0

    def test_matches_grid_oracle(self, rng):
        z, lam, gamma, rho = sample_prox_tuples(rng, 300)
        for zi, li, gi, ri in zip(z, lam, gamma, rho):
            u = mcp_prox_exact(zi, li, gi, ri)
            u_star, v_star = grid_prox_minimizer(zi, li, gi, ri)
            assert prox_objective(u, zi, li, gi, ri) <= v_star + 1e-6
            assert abs(u - u_star) < 1e-3

    def test_odd(self, rng):
        z = rng.normal(size=50, scale=4.0)
        for lam, gamma, rho in ((1.0, 2.0, 1.0), (0.5, 1.2, 0.3), (2.0, 5.0, 0.1)):
            assert np.allclose(mcp_prox_exact(-z, lam, gamma, rho),
                               -np.asarray(mcp_prox_exact(z, lam, gamma, rho)))


class TestMcpProxUnified:
    def test_hand_value(self):
        assert mcp_prox_unified(1.5, 1.0, 2.0, 1.0) == pytest.approx(1.0)

    def test_identity_region(self):
        assert mcp_prox_unified(7.0, 1.0, 2.0, 0.3) == 7.0

    def test_near_one_gamma_acts_like_hard_threshold(self):
        # gamma = 1.001: below lambda the output collapses to zero
        assert mcp_prox_unified(0.999, 1.0, 1.001, 1.0) == 0.0
        out = mcp_prox_unified(1.0005, 1.0, 1.001, 1.0)
        assert abs(out) > 0.4  # jumps away from zero just above lambda

    def test_gamma_near_one_thresholds_at_lambda(self, rng):
        lam, gamma = 1.3, 1.0 + 1e-9
        z = rng.uniform(-gamma * lam, gamma * lam, size=200)
        out = np.asarray(mcp_prox_unified(z, lam, gamma, 1.0))
        below = np.abs(z) <= lam
        assert np.all(out[below] == 0.0)
        assert np.all(out[~below] != 0.0)

    def test_large_gamma_approaches_soft_threshold(self, rng):
        lam, gamma = 0.7, 1e6
        z = rng.normal(size=300, scale=3.0)
        gap = np.abs(np.asarray(mcp_prox_unified(z, lam, gamma, 2.0))
                     - soft_threshold(z, lam))
        assert np.max(gap) < 1e-5

    def test_odd(self, rng):
        z = rng.normal(size=50, scale=2.0)
        assert np.allclose(mcp_prox_unified(-z, 0.8, 3.0, 1.0),
                           -np.asarray(mcp_prox_unified(z, 0.8, 3.0, 1.0)))


class TestHardThreshold:
    def test_clear_magnitude_order(self):
        out = hard_threshold([0.5, -3.0, 2.0, 0.1], 2)
        assert np.array_equal(out, [0.0, -3.0, 2.0, 0.0])

    def test_full_retention(self, rng):
        z = rng.normal(size=9)
        assert np.array_equal(hard_threshold(z, 9), z)

    def test_zero_k(self, rng):
        assert np.array_equal(hard_threshold(rng.normal(size=5), 0), np.zeros(5))

    def test_tie_lowest_index_wins(self):
        out = hard_threshold([1.0, -1.0, 1.0], 2)
        assert np.array_equal(out, [1.0, -1.0, 0.0])

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            hard_threshold([1.0, 2.0], 3)

    def test_projection_optimality_brute_force(self, rng):
        for _ in range(100):
            m = int(rng.integers(2, 9))
            k = int(rng.integers(0, m + 1))
            z = rng.normal(size=m, scale=2.0)
            out = hard_threshold(z, k)
            assert np.count_nonzero(out) <= k
            best = min(
                float(np.sum((z - _keep(z, supp)) ** 2))
                for supp in itertools.combinations(range(m), k)
            ) if k <= m else 0.0
            assert float(np.sum((z - out) ** 2)) <= best + 1e-12


def _keep(z, supp):
    out = np.zeros_like(z)
    for i in supp:
        out[i] = z[i]
    return out


class TestPenaltyDescriptors:
    def test_vector_prox_l1(self):
        out = vector_prox([3.0, -0.5], L1Penalty(1.0), rho=1.0)
        assert np.array_equal(out, [2.0, 0.0])

    def test_vector_prox_cardinality_zero(self, rng):
        out = vector_prox(rng.normal(size=6), CardinalityPenalty(0), rho=2.0)
        assert np.array_equal(out, np.zeros(6))

    def test_vector_prox_mcp_per_coordinate(self):
        out = vector_prox([1.5, 10.0], McpPenalty(1.0, 2.0, "exact"), rho=1.0)
        assert np.allclose(out, [1.0, 10.0])

    def test_vector_prox_none_identity(self, rng):
        z = rng.normal(size=4)
        assert np.array_equal(vector_prox(z, NoPenalty(), rho=1.0), z)

    def test_unknown_descriptor_rejected(self):
        with pytest.raises(TypeError, match="penalty"):
            vector_prox([1.0], object(), rho=1.0)

    def test_values(self):
        assert L1Penalty(2.0).value([1.0, -3.0]) == 8.0
        assert NoPenalty().value([5.0]) == 0.0
        assert CardinalityPenalty(1).value([1.0, 0.0]) == 0.0
        assert CardinalityPenalty(1).value([1.0, 2.0]) == np.inf
        assert McpPenalty(1.0, 2.0).value([1.0, 5.0]) == pytest.approx(1.75)

    def test_descriptor_validation(self):
        with pytest.raises(ValueError):
            L1Penalty(0.0)
        with pytest.raises(ValueError):
            McpPenalty(1.0, 1.0)
        with pytest.raises(ValueError):
            McpPenalty(1.0, 2.0, "fancy")
        with pytest.raises(ValueError):
            CardinalityPenalty(-1)
