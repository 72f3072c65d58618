"""Experiment configuration schema (TOML or JSON) and builders for library objects."""

from __future__ import annotations

import json
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .confset import DEFAULT_L_PRIME, CsConfig
from .estimate import DEFAULT_C3, SolverConfig
from .mc import ExperimentConfig
from .sparsity_tests import DEFAULT_D_CONST, DEFAULT_U_CONST, TestConfig
from .synth import DesignSpec, PriorSpec, SignalSpec, SparseSignalSpec


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DesignSection(_Section):
    kind: Literal["iid_gaussian", "bounded_rademacher", "ar1_gaussian", "correlated_gaussian"] = "iid_gaussian"
    n: int = Field(ge=2)
    p: int = Field(ge=1)
    b: float = 1.0
    ar_rho: Optional[float] = None
    sigma: Optional[List[List[float]]] = None
    lambda_min_sq: Optional[float] = None


class SignalSection(_Section):
    """``rho`` is absolute; ``rho_const`` means rho = rho_const * n^(-1/4)."""

    kind: Literal["sparse", "separated", "prior"] = "sparse"
    k: Optional[int] = None
    profile: Literal["constant", "decaying", "random_gaussian"] = "constant"
    amplitude: float = 1.0
    k0: Optional[int] = None
    k1: Optional[int] = None
    rho: Optional[float] = None
    rho_const: Optional[float] = None
    spike: Optional[float] = None
    r_norm: Optional[Literal[1, 2]] = None
    M: Optional[float] = None
    c: float = 0.5


class SolverSection(_Section):
    mode: Literal["greedy_forward", "exact_enumeration"] = "greedy_forward"
    c3: float = DEFAULT_C3
    lambda_sq: Optional[float] = None
    max_support: Optional[int] = None


class TestSection(_Section):
    __test__ = False

    strategy: Literal["residual_chisq", "estimator_distance", "u_statistic"] = "residual_chisq"
    gamma: float = 0.05
    k0: int = 1
    k1: int = 2
    threshold_mode: Literal["chi_sq_exact", "gaussian_approx"] = "chi_sq_exact"
    d_const: float = DEFAULT_D_CONST
    u_gamma_const: float = DEFAULT_U_CONST


class ConfsetSection(_Section):
    construction: Literal["sample_split", "two_radius"] = "sample_split"
    alpha: float = 0.05
    l_prime: float = DEFAULT_L_PRIME
    split_fraction: float = 0.5
    split_seed: Optional[int] = None
    lambda_min_sq: Optional[float] = None


class McSection(_Section):
    replications: int = Field(default=100, ge=1)
    base_seed: int = Field(default=0, ge=0, lt=2**64)
    fixed_theta: bool = False
    record_timing: bool = False


class ScanSection(_Section):
    """Grid of separations as multiples of n^(-1/4) (``rho_consts``) or absolute (``rho_grid``)."""

    rho_consts: Optional[List[float]] = None
    rho_grid: Optional[List[float]] = None
    alternative: Literal["prior", "separated"] = "prior"
    prior_c: float = 0.5


class Config(_Section):
    design: DesignSection
    signal: SignalSection = SignalSection()
    solver: SolverSection = SolverSection()
    test: TestSection = TestSection()
    confset: ConfsetSection = ConfsetSection()
    mc: McSection = McSection()
    scan: ScanSection = ScanSection()

    @model_validator(mode="after")
    def _scan_grid(self):
        if self.scan.rho_consts is not None and self.scan.rho_grid is not None:
            raise ValueError("scan: give rho_consts or rho_grid, not both")
        return self


def load_raw(path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        return json.loads(text)
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    return tomllib.loads(text)


def set_dotted(raw: dict, key: str, value) -> None:
    parts = key.split(".")
    node = raw
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ValueError(f"override {key!r}: {part!r} is not a section")
    node[parts[-1]] = value


def parse_override(text: str):
    if "=" not in text:
        raise ValueError(f"override {text!r} must look like section.key=value")
    key, value = text.split("=", 1)
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    return key.strip(), parsed


# --- builders -----------------------------------------------------------------


def build_design(cfg: Config) -> DesignSpec:
    d = cfg.design
    if d.kind == "iid_gaussian":
        return DesignSpec(d.n, d.p, "iid_gaussian", lambda_min_sq=d.lambda_min_sq)
    if d.kind == "bounded_rademacher":
        return DesignSpec(d.n, d.p, "bounded_rademacher", b=d.b, lambda_min_sq=d.lambda_min_sq)
    if d.kind == "ar1_gaussian":
        if d.ar_rho is None:
            raise ValueError("design.ar_rho is required for ar1_gaussian")
        spec = DesignSpec.ar1(d.n, d.p, d.ar_rho)
        return spec if d.lambda_min_sq is None else DesignSpec(
            d.n, d.p, spec.kind, sigma=spec.sigma, lambda_min_sq=d.lambda_min_sq, ar_rho=d.ar_rho)
    if d.sigma is None:
        raise ValueError("design.sigma is required for correlated_gaussian")
    return DesignSpec.correlated_gaussian(d.n, d.p, d.sigma, d.lambda_min_sq)


def _rho(value, const, n, what):
    if value is not None and const is not None:
        raise ValueError(f"signal: give {what} or rho_const, not both")
    if value is None and const is None:
        raise ValueError(f"signal: {what} or rho_const is required")
    return value if value is not None else const * n ** -0.25


def build_signal(cfg: Config):
    s, n, p = cfg.signal, cfg.design.n, cfg.design.p
    if s.kind == "sparse":
        if s.k is None:
            raise ValueError("signal.k is required for a sparse signal")
        return SparseSignalSpec(p, s.k, s.profile, s.amplitude)
    k0 = cfg.test.k0 if s.k0 is None else s.k0
    k1 = cfg.test.k1 if s.k1 is None else s.k1
    if s.kind == "separated":
        return SignalSpec(p, k0, k1, _rho(s.rho, s.rho_const, n, "rho"), s.spike, s.r_norm, s.M)
    return PriorSpec.from_separation(p, k1, _rho(s.rho, s.rho_const, n, "rho"), s.c)


def build_solver(cfg: Config) -> SolverConfig:
    s = cfg.solver
    return SolverConfig(lambda_sq=s.lambda_sq, mode=s.mode, max_support=s.max_support, c3=s.c3)


def build_test(cfg: Config) -> TestConfig:
    t = cfg.test
    return TestConfig(k0=t.k0, k1=t.k1, gamma=t.gamma, threshold_mode=t.threshold_mode,
                      d_const=t.d_const, u_gamma_const=t.u_gamma_const)


def build_cs(cfg: Config, design: DesignSpec) -> CsConfig:
    c = cfg.confset
    lam = design.lambda_min_sq if c.lambda_min_sq is None else c.lambda_min_sq
    return CsConfig(alpha=c.alpha, lambda_min_sq=lam, l_prime=c.l_prime, test_strategy=cfg.test.strategy,
                    split_fraction=c.split_fraction, split_seed=c.split_seed)


def build_experiment(cfg: Config, procedure: str, threads: int = 1) -> ExperimentConfig:
    design = build_design(cfg)
    return ExperimentConfig(
        design=design,
        signal=build_signal(cfg),
        replications=cfg.mc.replications,
        base_seed=cfg.mc.base_seed,
        procedure=procedure,
        strategy=cfg.test.strategy,
        solver=build_solver(cfg),
        cs=build_cs(cfg, design),
        test=build_test(cfg),
        fixed_theta=cfg.mc.fixed_theta,
        threads=threads,
        record_timing=cfg.mc.record_timing,
    )


def scan_grid(cfg: Config) -> list:
    if cfg.scan.rho_grid is not None:
        return list(cfg.scan.rho_grid)
    if cfg.scan.rho_consts is None:
        raise ValueError("scan.rho_consts or scan.rho_grid is required for the boundary verb")
    return [c * cfg.design.n ** -0.25 for c in cfg.scan.rho_consts]
