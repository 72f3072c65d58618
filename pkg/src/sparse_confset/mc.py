"""Replicated Monte Carlo experiments: coverage, diameters, test error rates.

Replication ``r`` draws everything from ``derive_seed(base_seed, r)``: the
signal from sub-stream 1 and the data ``(X, eps)`` from sub-stream 2. Results
are collected in replication order, so aggregates do not depend on the number
of worker threads.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from ._seeding import MASK64, check_seed, derive_seed
from .confset import CsConfig, contains, sample_split_cs, two_radius_cs
from .estimate import SolverConfig, l0_pls
from .sparsity_tests import KINDS, TestConfig, run_test
from .synth import (
    DesignSpec,
    PriorSpec,
    SignalSpec,
    SparseSignalSpec,
    distance_to_sparse,
    generate_separated_signal,
    generate_sparse_signal,
    sample_model,
    sample_prior,
)

PROCEDURES = ("sample_split", "two_radius", "test_only")
CSV_COLUMNS = ("rep", "seed", "covered", "diameter_sq", "statistic", "reject", "branch", "wall_ms")
QUANTILES = (0.5, 0.9, 0.95)

Signal = Union[SparseSignalSpec, SignalSpec, PriorSpec]


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    design: DesignSpec
    signal: Signal
    replications: int = 100
    base_seed: int = 0
    procedure: str = "sample_split"
    strategy: str = "residual_chisq"
    solver: SolverConfig = field(default_factory=SolverConfig)
    cs: CsConfig = field(default_factory=CsConfig)
    test: Optional[TestConfig] = None
    fixed_theta: bool = False
    threads: int = 1
    record_timing: bool = False

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        check_seed(self.base_seed)
        if self.procedure not in PROCEDURES:
            raise ValueError(f"unknown procedure {self.procedure!r}; expected one of {PROCEDURES}")
        if self.strategy not in KINDS:
            raise ValueError(f"unknown test strategy {self.strategy!r}")
        if self.procedure != "sample_split" and self.test is None:
            raise ValueError(f"procedure {self.procedure!r} needs a TestConfig")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        p = getattr(self.signal, "p", None)
        if p is not None and p != self.design.p:
            raise ValueError(f"signal dimension {p} does not match design p={self.design.p}")


def draw_signal(signal: Signal, p: int, seed: int) -> np.ndarray:
    if isinstance(signal, SparseSignalSpec):
        return generate_sparse_signal(signal.p, signal.k, signal.profile, signal.amplitude, seed)
    if isinstance(signal, SignalSpec):
        return generate_separated_signal(signal, seed)
    if isinstance(signal, PriorSpec):
        return sample_prior(signal, seed, p)
    raise TypeError(f"unsupported signal spec {type(signal).__name__}")


def replication_seed(cfg: ExperimentConfig, r: int) -> int:
    return derive_seed(cfg.base_seed, r)


def _theta_seed(cfg: ExperimentConfig, seed_r: int) -> int:
    return derive_seed(cfg.base_seed, MASK64) if cfg.fixed_theta else derive_seed(seed_r, 1)


def run_replication(cfg: ExperimentConfig, r: int) -> dict:
    start = time.perf_counter()
    seed_r = replication_seed(cfg, r)
    theta = draw_signal(cfg.signal, cfg.design.p, _theta_seed(cfg, seed_r))
    sample = sample_model(cfg.design, theta, derive_seed(seed_r, 2))
    row = {"rep": r, "seed": seed_r, "covered": None, "diameter_sq": None,
           "statistic": None, "reject": None, "branch": None}
    test_cfg = cfg.test
    if cfg.procedure == "sample_split":
        cs = sample_split_cs(sample, cfg.cs, cfg.solver)
    elif cfg.procedure == "two_radius":
        cs = two_radius_cs(sample, replace(cfg.cs, test_strategy=cfg.strategy), cfg.solver, test_cfg)
        row.update(statistic=cs.outcome.statistic, reject=cs.outcome.reject, branch=cs.branch)
    else:
        cs = None
        fit = l0_pls(sample, cfg.solver) if cfg.strategy == "estimator_distance" else None
        out = run_test(cfg.strategy, sample, test_cfg, cfg.solver, fit=fit)
        row.update(statistic=out.statistic, reject=out.reject)
    if cs is not None:
        row.update(covered=contains(cs, theta), diameter_sq=cs.diameter_sq)
    row["wall_ms"] = (time.perf_counter() - start) * 1e3
    return row


def _rate(flags):
    flags = [bool(f) for f in flags if f is not None]
    if not flags:
        return None, None
    k, m = sum(flags), len(flags)
    lo, hi = proportion_confint(k, m, alpha=0.05, method="wilson")
    return k / m, (float(lo), float(hi))


@dataclass
class Report:
    replications: int
    coverage_rate: Optional[float]
    coverage_ci: Optional[tuple]
    diameter_sq_quantiles: Optional[dict]
    reject_rate: Optional[float]
    reject_ci: Optional[tuple]
    branch_rate: Optional[float]
    mean_runtime_ms: float
    rows: list = field(repr=False, default_factory=list)
    record_timing: bool = field(repr=False, default=False)

    @classmethod
    def from_rows(cls, rows, record_timing=False) -> "Report":
        cov, cov_ci = _rate(r["covered"] for r in rows)
        rej, rej_ci = _rate(r["reject"] for r in rows)
        branch, _ = _rate(None if r["branch"] is None else r["branch"] == "large" for r in rows)
        diam = [r["diameter_sq"] for r in rows if r["diameter_sq"] is not None]
        quant = None
        if diam:
            vals = np.quantile(np.asarray(diam), QUANTILES, method="inverted_cdf")
            quant = {str(q): float(v) for q, v in zip(QUANTILES, vals)}
        return cls(
            replications=len(rows), coverage_rate=cov, coverage_ci=cov_ci,
            diameter_sq_quantiles=quant, reject_rate=rej, reject_ci=rej_ci, branch_rate=branch,
            mean_runtime_ms=float(np.mean([r["wall_ms"] for r in rows])),
            rows=rows, record_timing=record_timing,
        )

    def to_dict(self) -> dict:
        return {
            "replications": self.replications,
            "coverage_rate": self.coverage_rate,
            "coverage_ci": list(self.coverage_ci) if self.coverage_ci else None,
            "diameter_sq_quantiles": self.diameter_sq_quantiles,
            "reject_rate": self.reject_rate,
            "reject_ci": list(self.reject_ci) if self.reject_ci else None,
            "branch_rate": self.branch_rate,
            "mean_runtime_ms": self.mean_runtime_ms,
        }

    def csv_text(self) -> str:
        """Per-replication table. ``wall_ms`` is left empty unless timing was requested."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([
                r["rep"], r["seed"], _fmt(r["covered"]), _fmt(r["diameter_sq"]),
                _fmt(r["statistic"]), _fmt(r["reject"]), _fmt(r["branch"]),
                _fmt(r["wall_ms"]) if self.record_timing else "",
            ])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_experiment(cfg: ExperimentConfig) -> Report:
    reps = range(cfg.replications)
    if cfg.threads == 1:
        rows = [run_replication(cfg, r) for r in reps]
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            rows = list(pool.map(lambda r: run_replication(cfg, r), reps))
    return Report.from_rows(rows, cfg.record_timing)


@dataclass(frozen=True)
class ScanRow:
    rho: float
    reject_rate_h0: float
    reject_rate_h1: float

    @property
    def error_sum(self) -> float:
        return self.reject_rate_h0 + (1.0 - self.reject_rate_h1)

    def to_dict(self) -> dict:
        return {"rho": self.rho, "reject_rate_h0": self.reject_rate_h0,
                "reject_rate_h1": self.reject_rate_h1, "error_sum": self.error_sum}


def run_boundary_scan(
    cfg: ExperimentConfig,
    rho_grid: Sequence[float],
    alternative: str = "prior",
    prior_c: float = 0.5,
) -> list:
    """Type I and type II error rates of the configured test across ``rho_grid``.

    ``cfg.signal`` is the null (a k0-sparse signal spec). The type I rate does
    not depend on rho and is estimated once. Alternatives are drawn from the
    sparse-spike prior with rho_bar = rho (``alternative="prior"``) or built
    at distance exactly rho (``"separated"``). All grid points share the
    replication seeds, so neighbouring points see coupled data.
    """
    grid = [float(r) for r in rho_grid]
    if not grid:
        raise ValueError("rho_grid must be nonempty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("rho_grid must be strictly increasing")
    if cfg.test is None:
        raise ValueError("boundary scan needs a TestConfig")
    if alternative not in ("prior", "separated"):
        raise ValueError(f"unknown alternative {alternative!r}")
    if not isinstance(cfg.signal, SparseSignalSpec) or cfg.signal.k > cfg.test.k0:
        raise ValueError("boundary scan needs a null signal: a sparse signal with k <= test.k0")
    base = replace(cfg, procedure="test_only")
    h0 = run_experiment(base).reject_rate
    p, k0, k1 = cfg.design.p, cfg.test.k0, cfg.test.k1
    out = []
    for rho in grid:
        if alternative == "prior":
            alt = PriorSpec.from_separation(p, k1, rho, prior_c)
        else:
            alt = SignalSpec(p, k0, k1, rho)
        h1 = run_experiment(replace(base, signal=alt)).reject_rate
        out.append(ScanRow(rho, h0, h1))
    return out


def scan_csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("rho", "reject_rate_h0", "reject_rate_h1", "error_sum"))
    for r in rows:
        w.writerow([repr(r.rho), repr(r.reject_rate_h0), repr(r.reject_rate_h1), repr(r.error_sum)])
    return buf.getvalue()


# --- calibration of the shipped constants ------------------------------------


def calibrate_c3(grid=(1.5, 2.0, 2.5, 3.0, 3.5, 4.0), n=200, p=100, k0=3, reps=1000, target=0.05, base_seed=11):
    """Smallest c3 in ``grid`` with P(k_hat > 3 k0) <= target under k0-sparse truths."""
    design = DesignSpec.iid_gaussian(n, p)
    signal = SparseSignalSpec(p, k0, "constant", 1.0)
    freqs = {}
    for c3 in grid:
        solver = SolverConfig(c3=c3)
        big = 0
        for r in range(reps):
            s = derive_seed(base_seed, r)
            theta = draw_signal(signal, p, derive_seed(s, 1))
            fit = l0_pls(sample_model(design, theta, derive_seed(s, 2)), solver)
            big += fit.k_hat > 3 * k0
        freqs[c3] = big / reps
    chosen = next((c for c in grid if freqs[c] <= target), None)
    return chosen, freqs


def corner_errors(n, p, k, signal, solver=SolverConfig(), reps=500, base_seed=13):
    """Normalized squared estimation errors ||theta_hat - theta||^2 / (log p * k / n)."""
    design = DesignSpec.iid_gaussian(n, p)
    out = np.empty(reps)
    for r in range(reps):
        s = derive_seed(base_seed, r)
        theta = draw_signal(signal, p, derive_seed(s, 1))
        fit = l0_pls(sample_model(design, theta, derive_seed(s, 2)), solver)
        d = fit.theta_hat - theta
        out[r] = (d @ d) / (math.log(p) * k / n)
    return out


def calibrate_l_prime(n=300, p=400, k0=2, k1=12, rho_const=10.0, level=0.95, reps=400,
                      amplitudes=(0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.5, 0.7), solver=SolverConfig()):
    """Smallest L' with ||theta_hat - theta|| <= L' sqrt(log p k / n) in at least
    ``level`` of replications at every corner: equal-amplitude k0-sparse signals
    over ``amplitudes`` and the k1-sparse signal at separation rho_const n^(-1/4)."""
    q = {}
    for a in amplitudes:
        q[("null", a)] = float(np.quantile(corner_errors(n, p, k0, SparseSignalSpec(p, k0, "constant", a), solver, reps), level))
    rho = rho_const * n ** -0.25
    q[("alt", rho)] = float(np.quantile(corner_errors(n, p, k1, SignalSpec(p, k0, k1, rho), solver, reps), level))
    return math.sqrt(max(q.values())), q


def calibrate_d_const(grid=(0.25, 0.5, 1.0, 2.0), n=300, p=500, k0=3, k1=12, reps=1000, target=0.05,
                      amplitudes=(0.3, 1.0), solver=SolverConfig(), base_seed=17):
    """Smallest D in ``grid`` keeping the estimator-distance type I error <= target
    for equal-amplitude k0-sparse truths at each of ``amplitudes``."""
    design = DesignSpec.iid_gaussian(n, p)
    stats = []
    for a in amplitudes:
        signal = SparseSignalSpec(p, k0, "constant", a)
        for r in range(reps):
            s = derive_seed(base_seed, r)
            theta = draw_signal(signal, p, derive_seed(s, 1))
            fit = l0_pls(sample_model(design, theta, derive_seed(s, 2)), solver)
            stats.append((a, distance_to_sparse(fit.theta_hat, k0) ** 2))
    scale = math.log(p) * k1 / n
    rates = {D: max(np.mean([st >= D * scale for b, st in stats if b == a]) for a in amplitudes) for D in grid}
    chosen = next((D for D in grid if rates[D] <= target), None)
    return chosen, rates
