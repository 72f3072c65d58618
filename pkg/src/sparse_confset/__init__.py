"""Sparse regression confidence sets: l0 estimation, sparsity tests, honest balls."""

from .confset import (
    AdaptiveConfidenceSet,
    BallConfidenceSet,
    CsConfig,
    SampleSplitConfidenceSet,
    contains,
    diameter_sq,
    sample_split_cs,
    two_radius_cs,
)
from .estimate import (
    L0PenalizedRegression,
    PenalizedFit,
    SolverConfig,
    l0_pls,
    select_lambda,
    sparse_ls_min_residual,
)
from .sparsity_tests import (
    TestConfig,
    TestOutcome,
    estimator_distance_test,
    residual_min_test,
    u_gamma_quantile,
    u_stat_min_test,
    u_stat_naive,
)
from .synth import (
    DesignSpec,
    InfeasibleSignalError,
    LinearSample,
    PriorSpec,
    SignalSpec,
    SparseSignalSpec,
    distance_to_sparse,
    generate_design,
    generate_separated_signal,
    generate_sparse_signal,
    sample_model,
    sample_prior,
)

__version__ = "0.1.0"
