"""Synthetic data for the sparse linear model ``Y = X theta + eps``.

Designs, sparse and separated signals, the sparse-spike product prior and
full model samples. Every generator is a pure function of its spec and an
unsigned 64-bit seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._seeding import as_generator, check_seed

DESIGN_KINDS = ("iid_gaussian", "bounded_rademacher", "correlated_gaussian")
PROFILES = ("constant", "decaying", "random_gaussian")


class InfeasibleSignalError(ValueError):
    """The requested separated signal cannot satisfy its norm constraint."""


def ar1_covariance(p: int, rho: float) -> np.ndarray:
    idx = np.arange(p)
    return float(rho) ** np.abs(idx[:, None] - idx[None, :])


@dataclass(frozen=True, eq=False)
class DesignSpec:
    """Law of the n x p design matrix.

    ``lambda_min_sq`` is a known lower bound on the smallest eigenvalue of the
    population Gram matrix; it defaults to that eigenvalue.
    """

    n: int
    p: int
    kind: str = "iid_gaussian"
    b: float = 1.0
    sigma: Optional[np.ndarray] = None
    lambda_min_sq: Optional[float] = None
    ar_rho: Optional[float] = None
    _chol: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if int(self.n) < 2:
            raise ValueError(f"design needs n >= 2, got n={self.n}")
        if int(self.p) < 1:
            raise ValueError(f"design needs p >= 1, got p={self.p}")
        if self.kind not in DESIGN_KINDS:
            raise ValueError(f"unknown design kind {self.kind!r}; expected one of {DESIGN_KINDS}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "p", int(self.p))
        if self.kind == "correlated_gaussian":
            if self.sigma is None:
                raise ValueError("correlated_gaussian design requires sigma")
            sigma = np.asarray(self.sigma, dtype=float)
            if sigma.shape != (self.p, self.p):
                raise ValueError(f"sigma must be {self.p}x{self.p}, got {sigma.shape}")
            if not np.allclose(sigma, sigma.T, atol=1e-12):
                raise ValueError("sigma must be symmetric")
            if not np.allclose(np.diag(sigma), 1.0, atol=1e-12):
                raise ValueError("sigma must have unit diagonal")
            try:
                chol = np.linalg.cholesky(sigma)
            except np.linalg.LinAlgError:
                raise ValueError("sigma is not positive definite") from None
            eig_min = float(np.linalg.eigvalsh(sigma)[0])
            if eig_min <= 0:
                raise ValueError("sigma is not positive definite")
            object.__setattr__(self, "sigma", sigma)
            object.__setattr__(self, "_chol", chol)
        else:
            eig_min = 1.0
        if self.kind == "bounded_rademacher" and not self.b >= 1.0:
            # unit-variance entries bounded by b exist only for b >= 1
            raise ValueError(f"bounded_rademacher needs b >= 1 for unit variance, got b={self.b}")
        if self.lambda_min_sq is None:
            object.__setattr__(self, "lambda_min_sq", eig_min)
        elif not 0 < self.lambda_min_sq <= eig_min * (1 + 1e-10):
            raise ValueError(
                f"lambda_min_sq={self.lambda_min_sq} must lie in (0, {eig_min}] "
                "(smallest eigenvalue of sigma)"
            )

    @classmethod
    def iid_gaussian(cls, n: int, p: int) -> "DesignSpec":
        return cls(n, p, "iid_gaussian")

    @classmethod
    def bounded_rademacher(cls, n: int, p: int, b: float = 1.0) -> "DesignSpec":
        return cls(n, p, "bounded_rademacher", b=b)

    @classmethod
    def correlated_gaussian(cls, n: int, p: int, sigma, lambda_min_sq=None) -> "DesignSpec":
        return cls(n, p, "correlated_gaussian", sigma=sigma, lambda_min_sq=lambda_min_sq)

    @classmethod
    def ar1(cls, n: int, p: int, rho: float) -> "DesignSpec":
        if not -1 < rho < 1:
            raise ValueError(f"AR(1) coefficient must lie in (-1, 1), got {rho}")
        return cls(n, p, "correlated_gaussian", sigma=ar1_covariance(p, rho), ar_rho=float(rho))

    def with_n(self, n: int) -> "DesignSpec":
        return DesignSpec(n, self.p, self.kind, self.b, self.sigma, self.lambda_min_sq, self.ar_rho)

    def to_dict(self) -> dict:
        out = {"n": self.n, "p": self.p, "kind": self.kind, "lambda_min_sq": self.lambda_min_sq}
        if self.kind == "bounded_rademacher":
            out["b"] = self.b
        if self.kind == "correlated_gaussian":
            if self.ar_rho is not None:
                out["ar_rho"] = self.ar_rho
            else:
                out["sigma"] = self.sigma.tolist()
        return out


@dataclass(frozen=True)
class SparseSignalSpec:
    """k-sparse signal at uniformly random positions (a member of B0(k))."""

    p: int
    k: int
    profile: str = "constant"
    amplitude: float = 1.0


@dataclass(frozen=True)
class SignalSpec:
    """Signal separated by ``rho`` in l2 from every k0-sparse vector.

    ``spike`` is the magnitude of the k0 large coordinates; ``None`` means
    ``max(5 * rho, 5)``. ``r_norm``/``M`` optionally restrict to an lr-ball.
    """

    p: int
    k0: int
    k1: int
    rho: float
    spike: Optional[float] = None
    r_norm: Optional[int] = None
    M: Optional[float] = None

    def __post_init__(self):
        if not 0 <= self.k0 < self.k1 <= self.p:
            raise ValueError(f"need 0 <= k0 < k1 <= p, got k0={self.k0}, k1={self.k1}, p={self.p}")
        if not self.rho >= 0:
            raise ValueError(f"rho must be >= 0, got {self.rho}")
        if (self.M is None) != (self.r_norm is None):
            raise ValueError("r_norm and M must be given together")
        if self.r_norm is not None and self.r_norm not in (1, 2):
            raise ValueError(f"r_norm must be 1 or 2, got {self.r_norm}")
        if self.M is not None and not self.M > 0:
            raise ValueError(f"M must be positive, got {self.M}")

    @property
    def spike_magnitude(self) -> float:
        return max(5.0 * self.rho, 5.0) if self.spike is None else float(self.spike)


@dataclass(frozen=True)
class PriorSpec:
    """Product prior: each coordinate is 0 w.p. 1-h and +-b w.p. h/2 each."""

    b_amp: float
    h_prob: float
    c: float = 0.5
    k1: Optional[int] = None
    p: Optional[int] = None
    rho_bar: Optional[float] = None

    def __post_init__(self):
        if not 0 <= self.h_prob <= 1:
            raise ValueError(f"h_prob must lie in [0, 1], got {self.h_prob}")
        if not self.b_amp >= 0:
            raise ValueError(f"b_amp must be >= 0, got {self.b_amp}")

    @classmethod
    def from_separation(cls, p: int, k1: int, rho_bar: float, c: float = 0.5) -> "PriorSpec":
        """b = rho_bar / (c sqrt(k1)), h = c k1 / p, so that b^2 p h = rho_bar^2 / c."""
        if not 0 < c < 1:
            raise ValueError(f"c must lie in (0, 1), got {c}")
        h = c * k1 / p
        if not 0 < h < 1:
            raise ValueError(f"h = c*k1/p = {h} must lie in (0, 1)")
        b = rho_bar / (c * np.sqrt(k1))
        return cls(b_amp=float(b), h_prob=float(h), c=float(c), k1=int(k1), p=int(p), rho_bar=float(rho_bar))

    def dimension(self, p: Optional[int] = None) -> int:
        dim = self.p if p is None else p
        if dim is None:
            raise ValueError("prior has no dimension; pass p")
        return int(dim)


@dataclass(frozen=True, eq=False)
class LinearSample:
    """One draw (X, theta, Y). ``theta_true`` is None for data read from disk without it."""

    X: np.ndarray
    theta_true: Optional[np.ndarray]
    Y: np.ndarray
    seed: Optional[int] = None
    design: Optional[DesignSpec] = None

    def __post_init__(self):
        if self.X.ndim != 2:
            raise ValueError(f"X must be two-dimensional, got shape {self.X.shape}")
        n, p = self.X.shape
        bad_theta = self.theta_true is not None and self.theta_true.shape != (p,)
        if bad_theta or self.Y.shape != (n,):
            theta_shape = None if self.theta_true is None else self.theta_true.shape
            raise ValueError(f"inconsistent sample: X {self.X.shape}, theta {theta_shape}, Y {self.Y.shape}")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def rows(self, idx) -> "LinearSample":
        return LinearSample(self.X[idx], self.theta_true, self.Y[idx], self.seed, None)


def generate_design(spec: DesignSpec, seed) -> np.ndarray:
    """Draw an ``n x p`` design matrix with the law described by ``spec``."""
    rng = as_generator(seed)
    n, p = spec.n, spec.p
    if spec.kind == "iid_gaussian":
        return rng.standard_normal((n, p))
    if spec.kind == "bounded_rademacher":
        return rng.choice(np.array([-1.0, 1.0]), size=(n, p))
    return rng.standard_normal((n, p)) @ spec._chol.T


def _amplitudes(profile: str, amplitude: float, k: int, rng) -> np.ndarray:
    if profile == "constant":
        if amplitude == 0:
            raise ValueError("constant profile needs a nonzero amplitude")
        return np.full(k, float(amplitude))
    if profile == "decaying":
        if amplitude == 0:
            raise ValueError("decaying profile needs a nonzero amplitude")
        return float(amplitude) / np.arange(1, k + 1)
    if profile == "random_gaussian":
        vals = rng.standard_normal(k) * (1.0 if amplitude is None else float(amplitude))
        while np.any(vals == 0):
            vals[vals == 0] = rng.standard_normal(int(np.sum(vals == 0)))
        return vals
    raise ValueError(f"unknown amplitude profile {profile!r}; expected one of {PROFILES}")


def generate_sparse_signal(p: int, k: int, profile: str = "constant", amplitude: float = 1.0, seed=0) -> np.ndarray:
    """Vector with exactly ``k`` nonzero entries at uniformly random positions."""
    if not 0 <= k <= p:
        raise ValueError(f"need 0 <= k <= p, got k={k}, p={p}")
    rng = as_generator(seed)
    theta = np.zeros(p)
    if k == 0:
        return theta
    pos = rng.choice(p, size=k, replace=False)
    theta[pos] = _amplitudes(profile, amplitude, k, rng)
    return theta


def distance_to_sparse(theta, k0: int) -> float:
    """Euclidean distance from ``theta`` to the set of k0-sparse vectors.

    Equal to the l2 norm of the p - k0 smallest-magnitude coordinates.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1:
        raise ValueError(f"theta must be one-dimensional, got shape {theta.shape}")
    p = theta.shape[0]
    if not 0 <= k0 <= p:
        raise ValueError(f"need 0 <= k0 <= p, got k0={k0}, p={p}")
    # stable sort: among equal magnitudes the lower index is dropped first
    order = np.argsort(np.abs(theta), kind="stable")
    rest = theta[order[: p - k0]]
    return float(np.sqrt(np.dot(rest, rest)))


def generate_separated_signal(spec: SignalSpec, seed) -> np.ndarray:
    """k1-sparse vector at distance exactly ``rho`` from B0(k0).

    Built from k0 spikes of magnitude ``spec.spike_magnitude`` plus k1 - k0
    coordinates of magnitude rho / sqrt(k1 - k0), all at random positions.
    """
    if not spec.rho > 0:
        raise ValueError(f"separated signal needs rho > 0, got {spec.rho}")
    rng = as_generator(seed)
    m = spec.k1 - spec.k0
    small = spec.rho / np.sqrt(m)
    spike = spec.spike_magnitude
    if spec.k0 > 0 and spike < small:
        raise InfeasibleSignalError(
            f"spike magnitude {spike} is below the small-coordinate magnitude {small}"
        )
    if spec.M is not None:
        r = spec.r_norm
        norm_r = (spec.k0 * spike**r + m * small**r) ** (1.0 / r)
        if norm_r > spec.M:
            raise InfeasibleSignalError(
                f"separated signal has l{r} norm {norm_r:.6g} > M={spec.M}; "
                f"rho={spec.rho} is infeasible inside the l{r}-ball"
            )
    theta = np.zeros(spec.p)
    pos = rng.choice(spec.p, size=spec.k1, replace=False)
    theta[pos[: spec.k0]] = spike
    theta[pos[spec.k0:]] = small
    dist = distance_to_sparse(theta, spec.k0)
    assert abs(dist - spec.rho) <= 1e-9 * max(1.0, spec.rho), (dist, spec.rho)
    return theta


def sample_prior(prior: PriorSpec, seed, p: Optional[int] = None) -> np.ndarray:
    """Draw theta with iid coordinates in {0, +b, -b} (probabilities 1-h, h/2, h/2)."""
    rng = as_generator(seed)
    dim = prior.dimension(p)
    active = rng.random(dim) < prior.h_prob
    signs = np.where(rng.random(dim) < 0.5, 1.0, -1.0)
    return np.where(active, signs * prior.b_amp, 0.0)


def sample_model(design: DesignSpec, theta, seed) -> LinearSample:
    """Fresh design and standard Gaussian noise; ``Y = X theta + eps``."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (design.p,):
        raise ValueError(f"theta has shape {theta.shape}, design expects ({design.p},)")
    seed = check_seed(seed)
    design_ss, noise_ss = np.random.SeedSequence(seed).spawn(2)
    X = generate_design(design, np.random.default_rng(design_ss))
    eps = np.random.default_rng(noise_ss).standard_normal(design.n)
    return LinearSample(X=X, theta_true=theta, Y=X @ theta + eps, seed=seed, design=design)
