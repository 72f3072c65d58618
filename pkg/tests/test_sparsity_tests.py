import math

import numpy as np
import pytest
from scipy import stats

from oracles import enum_u_statistic, grid_residual_statistic, naive_u
from sparse_confset import (
    DesignSpec,
    LinearSample,
    PenalizedFit,
    SolverConfig,
    TestConfig,
    TestOutcome,
    estimator_distance_test,
    generate_separated_signal,
    generate_sparse_signal,
    l0_pls,
    residual_min_test,
    sample_model,
    u_gamma_quantile,
    u_stat_min_test,
    u_stat_naive,
)
from sparse_confset.synth import SignalSpec
from sparse_confset.sparsity_tests import chi2_quantile, run_test


def _sample(n, p, theta, seed):
    return sample_model(DesignSpec.iid_gaussian(n, p), theta, seed)


class TestQuantiles:
    def test_gaussian(self):
        assert u_gamma_quantile(0.05, 100, "gaussian_approx") == pytest.approx(stats.norm.ppf(0.95), abs=1e-3)
        assert u_gamma_quantile(0.05, 100, "gaussian_approx") == pytest.approx(1.6449, abs=1e-3)

    def test_median(self):
        for n in (30, 200, 5000):
            u = u_gamma_quantile(0.5, n, "chi_sq_exact")
            exact = (stats.chi2.ppf(0.5, n) - n) / math.sqrt(2 * n)
            assert u == pytest.approx(-(2 / 3) / math.sqrt(2 * n), abs=1e-3)
            assert u == pytest.approx(exact, abs=1e-3)

    def test_converges_to_gaussian(self):
        diff = u_gamma_quantile(0.05, 10_000, "chi_sq_exact") - u_gamma_quantile(0.05, 10_000, "gaussian_approx")
        assert abs(diff) < 0.05

    @pytest.mark.parametrize("df", [30, 100, 1000])
    @pytest.mark.parametrize("prob", [0.01, 0.05, 0.5, 0.95, 0.99])
    def test_wilson_hilferty_accuracy(self, df, prob):
        assert chi2_quantile(prob, df) == pytest.approx(stats.chi2.ppf(prob, df), rel=2e-3)

    def test_invalid(self):
        with pytest.raises(ValueError):
            u_gamma_quantile(1.0, 10)
        with pytest.raises(ValueError):
            u_gamma_quantile(0.1, 10, "bogus")


class TestOutcomeType:
    def test_reject_consistency(self):
        with pytest.raises(ValueError):
            TestOutcome(1.0, 2.0, True, "residual_chisq")
        assert TestOutcome(2.0, 2.0, True, "u_statistic").reject

    def test_json(self):
        d = TestOutcome(3.0, 1.0, True, "residual_chisq", "exact").to_dict()
        assert d == {"kind": "residual_chisq", "statistic": 3.0, "threshold": 1.0, "reject": True, "mode_used": "exact"}


class TestResidualMin:
    def test_noiseless_null(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((30, 10))
        theta = np.zeros(10)
        theta[[2, 7]] = [1.0, -3.0]
        out = residual_min_test(LinearSample(X, theta, X @ theta), TestConfig(k0=2, k1=5))
        assert out.statistic == 0.0 and not out.reject

    @pytest.mark.parametrize("seed,scale", [(0, 1.0), (1, 3.0), (2, 0.2)])
    def test_grid_search_oracle(self, seed, scale):
        theta = scale * generate_sparse_signal(6, 4, "random_gaussian", seed=seed)
        s = _sample(20, 6, theta, seed + 10)
        out = residual_min_test(s, TestConfig(k0=2, k1=4))
        grid_min, resolution = grid_residual_statistic(s.X, s.Y, 2)
        assert out.statistic <= grid_min + 1e-12
        assert grid_min - out.statistic <= resolution

    def test_permutation_invariance(self):
        theta = generate_separated_signal(SignalSpec(12, 1, 4, 1.0), 3)
        s = _sample(25, 12, theta, 4)
        rng = np.random.default_rng(5)
        rows, cols = rng.permutation(25), rng.permutation(12)
        cfg = TestConfig(k0=2, k1=4)
        a = residual_min_test(s, cfg).statistic
        b = residual_min_test(LinearSample(s.X[rows][:, cols], None, s.Y[rows]), cfg).statistic
        assert a == pytest.approx(b, rel=1e-10, abs=1e-10)

    def test_power_at_separation(self):
        n, p = 400, 600
        rho = 10 * n ** -0.25
        cfg = TestConfig(k0=2, k1=12)
        rejects = [
            residual_min_test(_sample(n, p, generate_separated_signal(SignalSpec(p, 2, 12, rho), s), 10_000 + s), cfg).reject
            for s in range(50)
        ]
        assert np.mean(rejects) >= 0.9


class TestEstimatorDistance:
    def _fit(self, theta):
        theta = np.asarray(theta, float)
        sup = tuple(int(j) for j in np.flatnonzero(theta))
        return PenalizedFit(theta, sup, 0.0, 0.0, 0.01, "exact_enumeration")

    def test_sparse_estimate(self):
        out = estimator_distance_test(self._fit([0, 4.0, 0, 0]), TestConfig(k0=1, k1=3), n=50, p=4)
        assert out.statistic == 0.0 and not out.reject

    def test_example(self):
        out = estimator_distance_test(self._fit([3.0, 1, 1, 0, 0]), TestConfig(k0=1, k1=3), n=50, p=5)
        assert out.statistic == pytest.approx(2.0, abs=1e-14)
        assert out.threshold == pytest.approx(0.5 * math.log(5) * 3 / 50)

    def test_type_one(self):
        n, p = 300, 500
        cfg = TestConfig(k0=3, k1=12)
        rej = []
        for s in range(100):
            smp = _sample(n, p, generate_sparse_signal(p, 3, "constant", 1.0, seed=s), 50_000 + s)
            rej.append(estimator_distance_test(l0_pls(smp), cfg, n, p).reject)
        assert np.mean(rej) <= 0.07


class TestUStatistic:
    def test_two_sample_expansion(self):
        rng = np.random.default_rng(0)
        X, Y, v = rng.standard_normal((2, 5)), rng.standard_normal(2), rng.standard_normal(5)
        s = LinearSample(X, None, Y)
        expected = float(np.sum((Y[0] * X[0] - v) * (Y[1] * X[1] - v)))
        assert u_stat_naive(s, v) == pytest.approx(expected, rel=1e-14)

    def test_u0_against_double_loop(self):
        rng = np.random.default_rng(1)
        X, Y = rng.standard_normal((20, 10)), rng.standard_normal(20)
        s = LinearSample(X, None, Y)
        assert abs(u_stat_naive(s, np.zeros(10)) - naive_u(X, Y, np.zeros(10))) <= 1e-10
        cfg = TestConfig(k0=0, k1=1)
        assert abs(u_stat_min_test(s, cfg).statistic - max(0.0, naive_u(X, Y, np.zeros(10)))) <= 1e-10

    def test_column_means_point(self):
        rng = np.random.default_rng(2)
        X, Y = rng.standard_normal((15, 6)), rng.standard_normal(15)
        s = LinearSample(X, None, Y)
        a = Y[:, None] * X
        val = u_stat_naive(s, a.mean(axis=0))
        S, Q = a.sum(0), (a * a).sum(0)
        n = 15
        assert val == pytest.approx(np.sum((S**2 - n * Q) / (n * n * (n - 1))), abs=1e-12)
        assert val <= 0

    def test_zero_response(self):
        rng = np.random.default_rng(3)
        X, v = rng.standard_normal((8, 4)), rng.standard_normal(4)
        assert u_stat_naive(LinearSample(X, None, np.zeros(8)), v) == pytest.approx(v @ v, rel=1e-13)

    @pytest.mark.parametrize("seed", range(4))
    def test_min_matches_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        n, p, k0 = 12, 7, 2
        theta = np.zeros(p)
        theta[:3] = rng.normal(0, 1.0, 3)
        s = _sample(n, p, theta, seed + 100)
        out = u_stat_min_test(s, TestConfig(k0=k0, k1=4))
        assert abs(out.statistic - enum_u_statistic(s.X, s.Y, k0)) <= 1e-9

    def test_unbiased(self):
        # E U_n(v) = ||theta - v||^2
        n, p = 10, 4
        theta = np.array([0.5, -0.3, 0.0, 0.2])
        v = np.array([0.1, 0.0, 0.4, 0.0])
        vals = np.array([u_stat_naive(_sample(n, p, theta, s), v) for s in range(4000)])
        se = vals.std(ddof=1) / math.sqrt(len(vals))
        assert abs(vals.mean() - np.sum((theta - v) ** 2)) <= 3 * se

    def test_n_less_than_two(self):
        with pytest.raises(ValueError):
            u_stat_naive(LinearSample(np.ones((1, 2)), None, np.ones(1)), np.zeros(2))

    def test_type_one_default_constant(self):
        n, p = 400, 100
        cfg = TestConfig(k0=2, k1=10)
        rej = [
            u_stat_min_test(_sample(n, p, generate_sparse_signal(p, 2, "constant", 0.5, seed=s), 7000 + s), cfg).reject
            for s in range(200)
        ]
        assert np.mean(rej) <= 0.05


def test_statistics_nonincreasing_in_k0():
    theta = generate_separated_signal(SignalSpec(30, 2, 8, 1.5), 1)
    s = _sample(60, 30, theta, 2)
    fit = l0_pls(s)
    for strategy in ("residual_chisq", "estimator_distance", "u_statistic"):
        vals = [run_test(strategy, s, TestConfig(k0=k, k1=10), fit=fit).statistic for k in range(6)]
        assert all(b <= a + 1e-10 for a, b in zip(vals, vals[1:])), (strategy, vals)


def test_run_test_unknown_strategy():
    s = _sample(10, 3, np.zeros(3), 0)
    with pytest.raises(ValueError):
        run_test("bogus", s, TestConfig(k0=1, k1=2))
