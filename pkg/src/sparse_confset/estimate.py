"""l0-penalized least squares and sparse residual minimization.

The estimator minimizes ``||Y - X v||^2 / n + lambda^2 * |support(v)|``.
Exact mode enumerates every support up to ``max_support``; greedy mode runs
orthogonal matching pursuit and stops as soon as one more coordinate no
longer lowers the penalized objective.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_design_response, check_sparsity

ENUMERATION_BUDGET = 10**6
MODES = ("exact_enumeration", "greedy_forward")

# P(k_hat > 3 k0) <= 0.05 under k0-sparse truths at n=200, p=100, k0=3 holds
# for every c3 >= 1 (see mc.calibrate_c3); 3.0 has the smallest worst-corner risk.
DEFAULT_C3 = 3.0

_CHUNK = 20000
_DEGENERATE = 1e-12


def select_lambda(n: int, p: int, c3: float = DEFAULT_C3) -> float:
    """Penalty level ``lambda^2 = c3 * log(p) / n``."""
    if n < 2 or p < 2:
        raise ValueError(f"select_lambda needs n >= 2 and p >= 2, got n={n}, p={p}")
    if not c3 > 0:
        raise ValueError(f"c3 must be positive, got {c3}")
    return c3 * math.log(p) / n


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings. ``lambda_sq=None`` defers to ``select_lambda`` at fit time."""

    lambda_sq: Optional[float] = None
    mode: str = "greedy_forward"
    max_support: Optional[int] = None
    c3: float = DEFAULT_C3

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown solver mode {self.mode!r}; expected one of {MODES}")
        if self.lambda_sq is not None and not self.lambda_sq > 0:
            raise ValueError(f"lambda_sq must be positive, got {self.lambda_sq}")
        if not self.c3 > 0:
            raise ValueError(f"c3 must be positive, got {self.c3}")
        if self.max_support is not None and self.max_support < 0:
            raise ValueError(f"max_support must be >= 0, got {self.max_support}")

    def resolve_lambda(self, n: int, p: int) -> float:
        return self.lambda_sq if self.lambda_sq is not None else select_lambda(n, max(p, 2), self.c3)


@dataclass(frozen=True, eq=False)
class PenalizedFit:
    theta_hat: np.ndarray
    support: tuple
    objective: float
    residual_sq_n: float
    lambda_sq: float
    mode: str
    rank_deficient: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def k_hat(self) -> int:
        return len(self.support)

    def to_dict(self) -> dict:
        return {
            "support": [int(j) for j in self.support],
            "theta_hat": [[int(j), float(self.theta_hat[j])] for j in self.support],
            "objective": float(self.objective),
            "lambda_sq": float(self.lambda_sq),
            "mode": self.mode,
        }


def _ls_on_support(X, Y, support):
    """Minimum-norm least squares restricted to ``support``; returns (beta, rss, rank_deficient)."""
    if len(support) == 0:
        return np.zeros(0), float(Y @ Y), False
    XS = X[:, list(support)]
    beta, _, rank, _ = np.linalg.lstsq(XS, Y, rcond=None)
    r = Y - XS @ beta
    return beta, float(r @ r), bool(rank < len(support))


def _best_of_size(X, Y, G, b, yy, s):
    """Smallest residual sum of squares over all supports of size ``s``.

    Returns (rss, support, any_degenerate). Ties resolve to the
    lexicographically first support.
    """
    p = G.shape[0]
    if s == 0:
        return yy, (), False
    diag = np.diag(G)
    if s == 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            red = np.where(diag > 0, b * b / diag, 0.0)
        j = int(np.argmax(red))
        return float(yy - red[j]), (j,), bool(np.any(diag <= 0))
    if s == 2:
        i, j = np.triu_indices(p, 1)
        gii, gjj, gij = diag[i], diag[j], G[i, j]
        det = gii * gjj - gij * gij
        with np.errstate(divide="ignore", invalid="ignore"):
            red = (b[i] ** 2 * gjj - 2 * b[i] * b[j] * gij + b[j] ** 2 * gii) / det
            bad = ~(det > _DEGENERATE * gii * gjj)
        degenerate = bool(np.any(bad))
        if degenerate:
            for t in np.flatnonzero(bad):
                _, rss_t, _ = _ls_on_support(X, Y, (int(i[t]), int(j[t])))
                red[t] = yy - rss_t
        t = int(np.argmax(red))
        return float(yy - red[t]), (int(i[t]), int(j[t])), degenerate

    best_rss, best_sup, degenerate = np.inf, None, False
    combos = itertools.combinations(range(p), s)
    while True:
        chunk = np.array(list(itertools.islice(combos, _CHUNK)), dtype=np.intp)
        if chunk.size == 0:
            break
        Gs = G[chunk[:, :, None], chunk[:, None, :]]
        bs = b[chunk]
        scale = np.prod(np.diagonal(Gs, axis1=1, axis2=2), axis=1)
        det = np.linalg.det(Gs)
        bad = ~(det > _DEGENERATE * scale)
        red = np.empty(len(chunk))
        ok = ~bad
        if np.any(ok):
            sol = np.linalg.solve(Gs[ok], bs[ok][:, :, None])[:, :, 0]
            red[ok] = np.einsum("ij,ij->i", bs[ok], sol)
        for t in np.flatnonzero(bad):
            degenerate = True
            _, rss_t, _ = _ls_on_support(X, Y, tuple(chunk[t]))
            red[t] = yy - rss_t
        t = int(np.argmax(red))
        if yy - red[t] < best_rss:
            best_rss, best_sup = float(yy - red[t]), tuple(int(v) for v in chunk[t])
    return best_rss, best_sup, degenerate


def _omp_path(X, Y, max_steps, stop=None):
    """Orthogonal matching pursuit. ``stop(support, rss)`` may veto each new step."""
    n, p = X.shape
    norms = np.sqrt(np.einsum("ij,ij->j", X, X))
    support: list = []
    beta, rss, rank_def = np.zeros(0), float(Y @ Y), False
    resid = Y.copy()
    while len(support) < max_steps:
        with np.errstate(divide="ignore", invalid="ignore"):
            score = np.abs(X.T @ resid) / norms
        score[norms == 0] = -np.inf
        score[support] = -np.inf
        j = int(np.argmax(score))
        if not np.isfinite(score[j]):
            break
        cand = support + [j]
        beta_c, rss_c, rd_c = _ls_on_support(X, Y, cand)
        if stop is not None and stop(cand, rss_c, rss):
            break
        support, beta, rss, rank_def = cand, beta_c, rss_c, rank_def or rd_c
        resid = Y - X[:, support] @ beta
    return support, beta, rss, rank_def


def _fit_xy(X, Y, cfg: SolverConfig) -> PenalizedFit:
    n, p = X.shape
    lam = cfg.resolve_lambda(n, p)
    if cfg.mode == "exact_enumeration":
        kmax = _default_exact_support(p) if cfg.max_support is None else cfg.max_support
        if kmax > p:
            raise ValueError(f"max_support={kmax} exceeds p={p}")
        if math.comb(p, kmax) > ENUMERATION_BUDGET:
            raise ValueError(
                f"exact enumeration over C({p}, {kmax}) = {math.comb(p, kmax)} supports "
                f"exceeds the budget {ENUMERATION_BUDGET}; lower max_support or use greedy_forward"
            )
        G, b, yy = X.T @ X, X.T @ Y, float(Y @ Y)
        best_obj, best_sup, degenerate = np.inf, (), False
        for s in range(kmax + 1):
            rss_s, sup_s, deg_s = _best_of_size(X, Y, G, b, yy, s)
            degenerate = degenerate or deg_s
            obj = rss_s / n + lam * s
            if obj < best_obj:
                best_obj, best_sup = obj, sup_s
        beta, rss, rank_def = _ls_on_support(X, Y, best_sup)
    else:
        kmax = min(n - 1, p) if cfg.max_support is None else min(cfg.max_support, p)

        def stop(cand, rss_new, rss_old):
            return rss_new / n + lam * len(cand) >= rss_old / n + lam * (len(cand) - 1)

        sup, beta, rss, rank_def = _omp_path(X, Y, kmax, stop)
        best_sup = tuple(sup)
        degenerate = False
    order = np.argsort(best_sup)
    best_sup = tuple(int(best_sup[i]) for i in order)
    beta = np.asarray(beta)[order] if len(best_sup) else beta
    theta_hat = np.zeros(p)
    theta_hat[list(best_sup)] = beta
    return PenalizedFit(
        theta_hat=theta_hat,
        support=best_sup,
        objective=rss / n + lam * len(best_sup),
        residual_sq_n=rss / n,
        lambda_sq=lam,
        mode=cfg.mode,
        rank_deficient=bool(rank_def),
        meta={"degenerate_candidates": bool(degenerate)},
    )


def _default_exact_support(p: int) -> int:
    s = 0
    while s < p and math.comb(p, s + 1) <= ENUMERATION_BUDGET:
        s += 1
    return s


def l0_pls(sample, cfg: SolverConfig = SolverConfig()) -> PenalizedFit:
    """Fit the l0-penalized least-squares estimator on ``sample``."""
    X, Y = check_design_response(sample.X, sample.Y)
    return _fit_xy(X, Y, cfg)


def sparse_ls_min_residual(Y, X, k0: int, cfg: Optional[SolverConfig] = None, return_mode: bool = False):
    """Minimum residual sum of squares over supports of size at most ``k0``.

    Returns ``(m, support)`` (plus the mode used when ``return_mode``).
    Supports are enumerated exhaustively when ``C(p, k0) <= 10**6``; otherwise
    OMP picks ``k0`` columns and the residual of the final least-squares refit
    is reported. ``cfg`` is accepted for symmetry and currently unused.
    """
    X, Y = check_design_response(X, Y)
    n, p = X.shape
    k0 = check_sparsity(k0, p)
    if math.comb(p, k0) <= ENUMERATION_BUDGET:
        if k0 == p:
            _, rss, _ = _ls_on_support(X, Y, tuple(range(p)))
            out = (rss, tuple(range(p)))
        else:
            rss, sup, _ = _best_of_size(X, Y, X.T @ X, X.T @ Y, float(Y @ Y), k0)
            out = (max(rss, 0.0), sup)
        mode = "exact"
    else:
        sup, _, rss, _ = _omp_path(X, Y, k0)
        out = (rss, tuple(sorted(sup)))
        mode = "greedy"
    return (*out, mode) if return_mode else out


class L0PenalizedRegression(RegressorMixin, BaseEstimator):
    """scikit-learn wrapper around :func:`l0_pls` (no intercept).

    Parameters
    ----------
    c3 : float
        Penalty constant, ``lambda^2 = c3 log(p) / n``. Ignored if ``lambda_sq`` is set.
    lambda_sq : float or None
        Explicit penalty level.
    mode : {"greedy_forward", "exact_enumeration"}
    max_support : int or None
    """

    def __init__(self, c3=DEFAULT_C3, lambda_sq=None, mode="greedy_forward", max_support=None):
        self.c3 = c3
        self.lambda_sq = lambda_sq
        self.mode = mode
        self.max_support = max_support

    def _config(self):
        return SolverConfig(lambda_sq=self.lambda_sq, mode=self.mode, max_support=self.max_support, c3=self.c3)

    def fit(self, X, y):
        X, y = check_design_response(X, y)
        self.fit_ = _fit_xy(X, y, self._config())
        self.coef_ = self.fit_.theta_hat
        self.support_ = np.array(self.fit_.support, dtype=int)
        self.objective_ = self.fit_.objective
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        return X @ self.coef_
