"""Brute-force reference implementations, independent of the library's closed forms."""

import itertools
import math

import numpy as np


def brute_distance(theta, k0):
    p = len(theta)
    best = np.inf
    for keep in itertools.combinations(range(p), k0):
        mask = np.ones(p, bool)
        mask[list(keep)] = False
        best = min(best, math.sqrt(float(np.sum(theta[mask] ** 2))))
    return best


def lstsq_rss(X, Y, support):
    if not support:
        return float(Y @ Y)
    XS = X[:, list(support)]
    beta = np.linalg.lstsq(XS, Y, rcond=None)[0]
    r = Y - XS @ beta
    return float(r @ r)


def brute_l0(X, Y, lam, kmax):
    """Global minimizer of RSS/n + lam*|S| over |S| <= kmax; ties: smaller, then lexicographic."""
    n, p = X.shape
    best = (np.inf, None)
    for s in range(kmax + 1):
        for S in itertools.combinations(range(p), s):
            obj = lstsq_rss(X, Y, S) / n + lam * s
            if obj < best[0]:
                best = (obj, S)
    return best


def brute_min_rss(X, Y, k0):
    p = X.shape[1]
    best = (np.inf, None)
    for s in range(k0 + 1):
        for S in itertools.combinations(range(p), s):
            rss = lstsq_rss(X, Y, S)
            if rss < best[0] - 1e-12:
                best = (rss, S)
    return best


def grid_residual_statistic(X, Y, k0, npts=401):
    """min |t_n(v)| over a grid on every k0-dimensional coordinate plane.

    Returns (grid minimum, grid resolution in statistic units).
    """
    n, p = X.shape
    best, resolution = np.inf, 0.0
    for S in itertools.combinations(range(p), k0):
        XS = X[:, list(S)]
        beta = np.linalg.lstsq(XS, Y, rcond=None)[0]
        G = XS.T @ XS
        r = Y - XS @ beta
        half = 1.5 * math.sqrt(max(n - r @ r, 1.0) / np.linalg.eigvalsh(G)[0])
        axes = [np.linspace(b - half, b + half, npts) for b in beta]
        mesh = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")])
        rss = np.sum((Y[:, None] - XS @ mesh) ** 2, axis=0)
        t = np.abs((rss - n) / math.sqrt(2 * n)).reshape((npts,) * k0)
        best = min(best, float(t.min()))
        for ax in range(k0):
            resolution = max(resolution, float(np.max(np.abs(np.diff(t, axis=ax)))))
    return best, resolution


def naive_u(X, Y, v):
    """Literal pair sum over i<k of <Y_i X_i - v, Y_k X_k - v>, scaled by 2/(n(n-1))."""
    n = len(Y)
    total = 0.0
    for i in range(n):
        for k in range(i + 1, n):
            total += float(np.dot(Y[i] * X[i] - v, Y[k] * X[k] - v))
    return 2.0 * total / (n * (n - 1))


def enum_u_statistic(X, Y, k0, u=naive_u):
    """inf over k0-sparse v of |U_n(v)| by support enumeration.

    On each support U_n is a quadratic in v_S; its gradient and Hessian are
    recovered exactly from evaluations of ``u`` (finite differences are exact
    for quadratics) and it is minimized by a linear solve. The quadratic is
    convex, so on a support the attainable values are [min, inf).
    """
    n, p = X.shape
    best = np.inf
    for s in range(k0 + 1):
        for S in itertools.combinations(range(p), s):
            c = u(X, Y, np.zeros(p))
            if s == 0:
                qmin = c
            else:
                E = np.zeros((s, p))
                E[np.arange(s), list(S)] = 1.0
                up = np.array([u(X, Y, E[a]) for a in range(s)])
                dn = np.array([u(X, Y, -E[a]) for a in range(s)])
                g = (up - dn) / 2.0
                H = np.empty((s, s))
                for a in range(s):
                    H[a, a] = up[a] + dn[a] - 2 * c
                    for b in range(a + 1, s):
                        H[a, b] = H[b, a] = u(X, Y, E[a] + E[b]) - up[a] - up[b] + c
                assert np.all(np.linalg.eigvalsh(H) > 0)
                qmin = c - 0.5 * g @ np.linalg.solve(H, g)
            best = min(best, max(0.0, qmin))
    return best
