import numpy as np
import pytest

from ftrbf.design import SmoothObjective, build_design, build_regularizer
from ftrbf.faults import (
    FaultPattern,
    FaultSpec,
    average_test_error,
    average_train_error,
    faulty_weights,
    sample_pattern,
    simulate_faulty_error,
)

from conftest import random_instance


class TestFaultSpec:
    def test_bounds_enforced(self):
        with pytest.raises(ValueError):
            FaultSpec(open_prob=1.0)
        with pytest.raises(ValueError):
            FaultSpec(open_prob=-0.1)
        with pytest.raises(ValueError):
            FaultSpec(mult_var=-1e-9)


class TestSamplePattern:
    def test_fault_free_pattern(self):
        p = sample_pattern(FaultSpec(0.0, 0.0), 7, rng_seed=1)
        assert np.array_equal(p.mult_noise, np.zeros(7))
        assert np.array_equal(p.open_mask, np.ones(7))

    def test_open_fraction_concentrates(self):
        prob = 0.9
        m = 20000
        p = sample_pattern(FaultSpec(prob, 0.0), m, rng_seed=2)
        frac = 1.0 - p.open_mask.mean()
        bound = 3.0 * np.sqrt(prob * (1 - prob) / m)
        assert abs(frac - prob) < bound

    def test_noise_variance_concentrates(self):
        p = sample_pattern(FaultSpec(0.0, 0.04), 100000, rng_seed=3)
        assert p.mult_noise.var() == pytest.approx(0.04, rel=0.05)
        assert abs(p.mult_noise.mean()) < 0.002

    def test_mask_is_binary(self):
        p = sample_pattern(FaultSpec(0.3, 0.1), 500, rng_seed=4)
        assert set(np.unique(p.open_mask)) <= {0.0, 1.0}


class TestFaultyWeights:
    def test_identity_when_fault_free(self):
        w = np.array([1.0, -2.0, 0.5])
        p = sample_pattern(FaultSpec(0.0, 0.0), 3, rng_seed=0)
        assert np.array_equal(faulty_weights(w, p), w)

    def test_all_open_zeroes_weights(self):
        w = np.array([1.0, -2.0])
        p = FaultPattern(mult_noise=np.zeros(2), open_mask=np.zeros(2))
        assert np.array_equal(faulty_weights(w, p), np.zeros(2))

    def test_direct_formula(self):
        p = FaultPattern(mult_noise=np.array([0.5]), open_mask=np.array([1.0]))
        assert faulty_weights(np.array([2.0]), p) == np.array([3.0])

    def test_length_mismatch(self):
        p = FaultPattern(mult_noise=np.zeros(2), open_mask=np.zeros(2))
        with pytest.raises(ValueError):
            faulty_weights(np.zeros(3), p)


class TestAverageTrainError:
    def test_fault_free_reduces_to_mse(self, rng):
        design, _, y, _ = random_instance(rng)
        w = rng.normal(size=design.n_centers)
        err = average_train_error(design, y, w, FaultSpec(0.0, 0.0))
        mse = np.sum((y - design.entries @ w) ** 2) / design.n_samples
        assert err == pytest.approx(mse, rel=1e-12)

    def test_zero_weights_any_fault_level(self, rng):
        design, _, y, _ = random_instance(rng)
        base = float(y @ y) / design.n_samples
        for fault in (FaultSpec(0.0, 0.3), FaultSpec(0.4, 0.0), FaultSpec(0.2, 0.1)):
            err = average_train_error(design, y, np.zeros(design.n_centers), fault)
            assert err == pytest.approx(base, rel=1e-12)

    def test_matches_monte_carlo(self, rng):
        design, _, y, _ = random_instance(rng, n=30, m=12)
        w = rng.normal(size=design.n_centers)
        fault = FaultSpec(0.05, 0.05)
        analytic = average_train_error(design, y, w, fault)
        mc, se = simulate_faulty_error(design, y, w, fault, 100000, rng_seed=11)
        assert abs(mc - analytic) <= 4.0 * se
        assert mc == pytest.approx(analytic, rel=0.01)

    def test_identity_with_smooth_objective(self, rng):
        # averaged error = p/N sum(y^2) + (1-p) psi(w), an exact algebraic identity
        for _ in range(10):
            design, reg, y, fault = random_instance(rng)
            obj = SmoothObjective(design, reg, y)
            w = rng.normal(size=design.n_centers)
            lhs = average_train_error(design, y, w, fault)
            rhs = (fault.open_prob / design.n_samples * float(y @ y)
                   + (1.0 - fault.open_prob) * obj.psi(w))
            assert lhs == pytest.approx(rhs, rel=1e-12)


class TestAverageTestError:
    def test_fault_free_plain_mse(self, rng):
        design, _, y, _ = random_instance(rng)
        x_test = rng.uniform(-2, 2, size=(20, design.entries.shape[1] and 1))
        # rebuild with known feature dim
        k = 2
        x = rng.uniform(-2, 2, size=(25, k))
        c = x[:8]
        y_tr = rng.normal(size=25)
        d_tr = build_design(x, c, 1.0)
        x_te = rng.uniform(-2, 2, size=(9, k))
        y_te = rng.normal(size=9)
        d_te = build_design(x_te, c, 1.0)
        w = rng.normal(size=8)
        err = average_test_error(d_te, y_te, w, FaultSpec(0.0, 0.0))
        assert err == pytest.approx(
            np.sum((y_te - d_te.entries @ w) ** 2) / 9, rel=1e-12)

    def test_same_data_equals_train_error(self, rng):
        design, _, y, fault = random_instance(rng)
        w = rng.normal(size=design.n_centers)
        assert average_test_error(design, y, w, fault) == pytest.approx(
            average_train_error(design, y, w, fault), rel=1e-15)

    def test_matches_monte_carlo(self, rng):
        k = 2
        x = rng.uniform(-2, 2, size=(30, k))
        c = x[:10]
        d_tr = build_design(x, c, 1.0)
        x_te = rng.uniform(-2, 2, size=(22, k))
        y_te = rng.normal(size=22)
        d_te = build_design(x_te, c, 1.0)
        w = rng.normal(size=10)
        fault = FaultSpec(0.03, 0.08)
        analytic = average_test_error(d_te, y_te, w, fault)
        mc, se = simulate_faulty_error(d_te, y_te, w, fault, 100000, rng_seed=12)
        assert abs(mc - analytic) <= 4.0 * se
        assert mc == pytest.approx(analytic, rel=0.01)

    def test_nonnegative(self, rng):
        for _ in range(20):
            design, _, y, fault = random_instance(rng)
            w = rng.normal(size=design.n_centers, scale=3.0)
            assert average_test_error(design, y, w, fault) >= 0.0

    def test_center_count_mismatch(self, rng):
        design, _, y, fault = random_instance(rng)
        with pytest.raises(ValueError, match="centers"):
            average_test_error(design, y, np.zeros(design.n_centers + 2), fault)


class TestSimulateFaultyError:
    def test_fault_free_degenerate(self, rng):
        design, _, y, _ = random_instance(rng)
        w = rng.normal(size=design.n_centers)
        mean, se = simulate_faulty_error(design, y, w, FaultSpec(0.0, 0.0),
                                         500, rng_seed=5)
        mse = np.sum((y - design.entries @ w) ** 2) / design.n_samples
        assert mean == pytest.approx(mse, rel=1e-12)
        assert se == pytest.approx(0.0, abs=1e-12)

    def test_zero_weights_degenerate(self, rng):
        design, _, y, _ = random_instance(rng)
        mean, se = simulate_faulty_error(design, y, np.zeros(design.n_centers),
                                         FaultSpec(0.2, 0.3), 200, rng_seed=6)
        assert mean == pytest.approx(float(y @ y) / design.n_samples, rel=1e-12)
        assert se == pytest.approx(0.0, abs=1e-12)

    def test_consistent_with_analytic(self, rng):
        design, _, y, fault = random_instance(rng, fault=FaultSpec(0.1, 0.1))
        w = rng.normal(size=design.n_centers)
        mean, se = simulate_faulty_error(design, y, w, fault, 20000, rng_seed=7)
        assert abs(mean - average_train_error(design, y, w, fault)) <= 4.0 * se

    def test_gap_shrinks_with_more_samples(self, rng):
        design, _, y, fault = random_instance(rng, n=25, m=10,
                                              fault=FaultSpec(0.1, 0.1))
        w = rng.normal(size=design.n_centers)
        analytic = average_train_error(design, y, w, fault)
        ses = []
        for n_samples in (1000, 10000, 100000):
            mean, se = simulate_faulty_error(design, y, w, fault, n_samples,
                                             rng_seed=8)
            assert abs(mean - analytic) <= 4.0 * se
            ses.append(se)
        assert ses[2] < ses[1] < ses[0]
