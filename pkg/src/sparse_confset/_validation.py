"""Input checks shared by the functional API and the estimator wrappers."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array, check_X_y


def check_design_response(X, Y):
    X, Y = check_X_y(X, Y, dtype=np.float64, y_numeric=True, ensure_min_samples=2)
    return X, Y


def check_vector(theta, p: int, name: str = "theta") -> np.ndarray:
    theta = check_array(np.asarray(theta, dtype=float).reshape(1, -1), dtype=np.float64).ravel()
    if theta.shape != (p,):
        raise ValueError(f"{name} has length {theta.shape[0]}, expected {p}")
    return theta


def check_sparsity(k: int, p: int, name: str = "k0") -> int:
    if isinstance(k, bool) or int(k) != k:
        raise TypeError(f"{name} must be an integer, got {k!r}")
    k = int(k)
    if not 0 <= k <= p:
        raise ValueError(f"need 0 <= {name} <= p={p}, got {k}")
    return k


def check_fraction(x: float, name: str) -> float:
    x = float(x)
    if not 0 < x < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {x}")
    return x
