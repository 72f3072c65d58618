"""Euclidean-ball confidence sets for the regression vector."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_design_response, check_fraction, check_vector
from .estimate import DEFAULT_C3, PenalizedFit, SolverConfig, _fit_xy, l0_pls
from .sparsity_tests import KINDS, TestConfig, TestOutcome, chi2_quantile, run_test
from .synth import LinearSample

# 0.95-quantile of the normalized squared error at the worst corner found by
# mc.calibrate_l_prime (n=300, p=400, k0=2 at amplitude 0.3: 4.51), rounded up.
DEFAULT_L_PRIME = 2.25

CONSTRUCTIONS = ("sample_split", "two_radius")


@dataclass(frozen=True, eq=False)
class BallConfidenceSet:
    """Closed ball ``{theta : ||theta - center||^2 <= radius_sq}``."""

    center: np.ndarray
    radius_sq: float
    level: float
    construction: str
    branch: Optional[str] = None
    fit: Optional[PenalizedFit] = field(default=None, repr=False)
    outcome: Optional[TestOutcome] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.radius_sq >= 0:
            raise ValueError(f"radius_sq must be >= 0, got {self.radius_sq}")
        if self.construction not in CONSTRUCTIONS:
            raise ValueError(f"unknown construction {self.construction!r}")
        if self.branch not in (None, "small", "large"):
            raise ValueError(f"unknown branch {self.branch!r}")

    def contains(self, theta) -> bool:
        return contains(self, theta)

    @property
    def diameter_sq(self) -> float:
        return diameter_sq(self)

    def to_dict(self) -> dict:
        nz = np.flatnonzero(self.center)
        return {
            "center": [[int(j), float(self.center[j])] for j in nz],
            "radius_sq": float(self.radius_sq),
            "level": float(self.level),
            "construction": self.construction,
            "branch": self.branch,
        }


def contains(cs: BallConfidenceSet, theta) -> bool:
    d = check_vector(theta, cs.center.shape[0]) - cs.center
    return bool(d @ d <= cs.radius_sq)


def diameter_sq(cs: BallConfidenceSet) -> float:
    return 4.0 * cs.radius_sq


@dataclass(frozen=True)
class CsConfig:
    alpha: float = 0.05
    lambda_min_sq: float = 1.0
    l_prime: float = DEFAULT_L_PRIME
    test_strategy: str = "residual_chisq"
    split_fraction: float = 0.5
    split_seed: Optional[int] = None  # None: first rows vs the rest

    def __post_init__(self):
        check_fraction(self.alpha, "alpha")
        check_fraction(self.split_fraction, "split_fraction")
        if not self.lambda_min_sq > 0:
            raise ValueError(f"lambda_min_sq must be positive, got {self.lambda_min_sq}")
        if not self.l_prime > 0:
            raise ValueError(f"l_prime must be positive, got {self.l_prime}")
        if self.test_strategy not in KINDS:
            raise ValueError(f"unknown test strategy {self.test_strategy!r}")


def split_rows(n: int, cfg: CsConfig):
    n1 = math.ceil(cfg.split_fraction * n)
    if n < 4 or n1 < 2 or n - n1 < 2:
        raise ValueError(f"degenerate split: n={n}, split_fraction={cfg.split_fraction}")
    idx = np.arange(n)
    if cfg.split_seed is not None:
        idx = np.random.default_rng(cfg.split_seed).permutation(n)
    return idx[:n1], idx[n1:]


def lower_tail_u(alpha: float, n2: int) -> float:
    """u with P((n2 - chi2_{n2}) / sqrt(n2) > u) ~= alpha."""
    return (n2 - chi2_quantile(alpha, n2)) / math.sqrt(n2)


def sample_split_cs(sample: LinearSample, cfg: CsConfig = CsConfig(), solver: SolverConfig = SolverConfig()) -> BallConfidenceSet:
    """Estimate on one half of the rows, calibrate the radius on the other.

    radius^2 = max(0, 2 / Lambda_min^2 * (R_hat + u_alpha / sqrt(n2))) where
    R_hat = ||Y2 - X2 theta_tilde||^2 / n2 - 1.
    """
    X, Y = check_design_response(sample.X, sample.Y)
    first, second = split_rows(X.shape[0], cfg)
    fit = _fit_xy(X[first], Y[first], solver)
    X2, Y2 = X[second], Y[second]
    n2 = len(second)
    r = Y2 - X2 @ fit.theta_hat
    risk = float(r @ r) / n2 - 1.0
    u = lower_tail_u(cfg.alpha, n2)
    radius_sq = max(0.0, 2.0 / cfg.lambda_min_sq * (risk + u / math.sqrt(n2)))
    return BallConfidenceSet(fit.theta_hat, radius_sq, 1.0 - cfg.alpha, "sample_split", fit=fit)


def two_radius_radius_sq(l_prime: float, k: int, n: int, p: int) -> float:
    return l_prime**2 * math.log(p) * k / n


def two_radius_cs(
    sample: LinearSample,
    cfg: CsConfig,
    solver: SolverConfig,
    test_cfg: TestConfig,
    outcome: Optional[TestOutcome] = None,
    fit: Optional[PenalizedFit] = None,
) -> BallConfidenceSet:
    """Ball around the l0 estimate with radius L' sqrt(log p * k / n).

    k is k0 when the sparsity test accepts and k1 when it rejects. Passing
    ``outcome`` skips running the test (used to force a branch).
    """
    n, p = sample.X.shape
    if fit is None:
        fit = l0_pls(sample, solver)
    if outcome is None:
        outcome = run_test(cfg.test_strategy, sample, test_cfg, solver, fit=fit)
    k = test_cfg.k1 if outcome.reject else test_cfg.k0
    return BallConfidenceSet(
        fit.theta_hat,
        two_radius_radius_sq(cfg.l_prime, k, n, p),
        1.0 - cfg.alpha,
        "two_radius",
        branch="large" if outcome.reject else "small",
        fit=fit,
        outcome=outcome,
    )


class _BallEstimator(BaseEstimator):
    def contains(self, theta) -> bool:
        check_is_fitted(self, "set_")
        return contains(self.set_, theta)

    def _publish(self, cs, n_features):
        self.set_ = cs
        self.center_ = cs.center
        self.radius_sq_ = cs.radius_sq
        self.diameter_sq_ = cs.diameter_sq
        self.n_features_in_ = n_features
        return self


class SampleSplitConfidenceSet(_BallEstimator):
    """Honest ball from a sample split; see :func:`sample_split_cs`."""

    def __init__(self, alpha=0.05, lambda_min_sq=1.0, split_fraction=0.5, split_seed=None,
                 c3=DEFAULT_C3, solver_mode="greedy_forward"):
        self.alpha = alpha
        self.lambda_min_sq = lambda_min_sq
        self.split_fraction = split_fraction
        self.split_seed = split_seed
        self.c3 = c3
        self.solver_mode = solver_mode

    def fit(self, X, y):
        X, y = check_design_response(X, y)
        cfg = CsConfig(alpha=self.alpha, lambda_min_sq=self.lambda_min_sq,
                       split_fraction=self.split_fraction, split_seed=self.split_seed)
        sample = LinearSample(X, None, y)
        cs = sample_split_cs(sample, cfg, SolverConfig(mode=self.solver_mode, c3=self.c3))
        return self._publish(cs, X.shape[1])


class AdaptiveConfidenceSet(_BallEstimator):
    """Two-radius ball switching between the k0 and k1 rates; see :func:`two_radius_cs`."""

    def __init__(self, k0=1, k1=2, alpha=0.05, gamma=0.05, l_prime=DEFAULT_L_PRIME,
                 test_strategy="residual_chisq", c3=DEFAULT_C3, solver_mode="greedy_forward"):
        self.k0 = k0
        self.k1 = k1
        self.alpha = alpha
        self.gamma = gamma
        self.l_prime = l_prime
        self.test_strategy = test_strategy
        self.c3 = c3
        self.solver_mode = solver_mode

    def fit(self, X, y):
        X, y = check_design_response(X, y)
        cfg = CsConfig(alpha=self.alpha, l_prime=self.l_prime, test_strategy=self.test_strategy)
        sample = LinearSample(X, None, y)
        cs = two_radius_cs(sample, cfg, SolverConfig(mode=self.solver_mode, c3=self.c3),
                           TestConfig(k0=self.k0, k1=self.k1, gamma=self.gamma))
        self.branch_ = cs.branch
        self.outcome_ = cs.outcome
        return self._publish(cs, X.shape[1])
