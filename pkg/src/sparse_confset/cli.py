"""Batch command line: ``sparse-confset VERB --config FILE --out DIR``.

Exit codes: 0 success, 1 computation failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from . import config as C
from .confset import contains, sample_split_cs, two_radius_cs
from .estimate import l0_pls
from .io import read_sample_binary, read_sample_csv
from .mc import Report, draw_signal, run_boundary_scan, run_experiment, scan_csv_text
from .sparsity_tests import run_test
from .synth import sample_model
from ._seeding import derive_seed

VERBS = ("estimate", "test", "confset", "coverage", "boundary")
THREADS_ENV = "SPARSE_CONFSET_THREADS"


class UsageError(Exception):
    pass


@dataclass
class CliCommand:
    verb: str
    config_path: Path
    output_dir: Path
    overrides: list = field(default_factory=list)
    threads: int = 1
    data_path: Optional[Path] = None
    config: Optional[C.Config] = None


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sparse-confset", description=__doc__.splitlines()[0])
    ap.add_argument("verb", choices=VERBS)
    ap.add_argument("--config", required=True, type=Path, help="TOML or JSON experiment file")
    ap.add_argument("--out", required=True, type=Path, help="output directory")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="dotted override, e.g. mc.replications=100 (repeatable)")
    ap.add_argument("--threads", type=int, default=None, help=f"worker threads (fallback: ${THREADS_ENV})")
    ap.add_argument("--data", type=Path, default=None,
                    help="sample file (.csv or .bin) for estimate/test/confset instead of synthesizing")
    return ap


def _format_validation(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        key = ".".join(str(x) for x in e["loc"])
        if e["type"] == "extra_forbidden":
            lines.append(f"unknown key {key!r}")
        else:
            lines.append(f"{key}: {e['msg']}")
    return "; ".join(lines)


def parse_and_validate(argv) -> CliCommand:
    """Parse ``argv`` and validate the configuration. Raises UsageError on bad input."""
    ap = _parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        raise UsageError("invalid command line") from exc
    if not ns.config.is_file():
        raise UsageError(f"config file not found: {ns.config}")
    threads = ns.threads
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        try:
            threads = int(env) if env else 1
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if threads < 1:
        raise UsageError(f"threads must be >= 1, got {threads}")
    try:
        raw = C.load_raw(ns.config)
        for text in ns.overrides:
            C.set_dotted(raw, *C.parse_override(text))
        cfg = C.Config.model_validate(raw)
    except ValidationError as err:
        raise UsageError(f"config error: {_format_validation(err)}") from None
    except ValueError as err:
        raise UsageError(f"config error: {err}") from None
    if ns.data is not None and not ns.data.is_file():
        raise UsageError(f"data file not found: {ns.data}")
    return CliCommand(ns.verb, ns.config, ns.out, list(ns.overrides), threads, ns.data, cfg)


def _single_sample(cmd: CliCommand, exp):
    if cmd.data_path is not None:
        reader = read_sample_binary if cmd.data_path.suffix == ".bin" else read_sample_csv
        return reader(cmd.data_path)
    seed = derive_seed(exp.base_seed, 0)
    theta = draw_signal(exp.signal, exp.design.p, derive_seed(seed, 1))
    return sample_model(exp.design, theta, derive_seed(seed, 2))


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def execute(cmd: CliCommand) -> int:
    cfg = cmd.config
    out = cmd.output_dir
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "effective_config.json", cfg.model_dump(mode="json"))
    procedure = {"coverage": cfg.confset.construction, "boundary": "test_only"}.get(cmd.verb, "test_only")
    exp = C.build_experiment(cfg, procedure, cmd.threads)

    if cmd.verb == "coverage":
        report = run_experiment(exp)
        _write_json(out / "summary.json", report.to_dict())
        report.write_csv(out / "replications.csv")
        return 0
    if cmd.verb == "boundary":
        rows = run_boundary_scan(exp, C.scan_grid(cfg), cfg.scan.alternative, cfg.scan.prior_c)
        _write_json(out / "summary.json", {"grid": [r.to_dict() for r in rows]})
        (out / "boundary.csv").write_text(scan_csv_text(rows))
        return 0

    sample = _single_sample(cmd, exp)
    row = {"rep": 0, "seed": sample.seed if sample.seed is not None else "", "covered": None,
           "diameter_sq": None, "statistic": None, "reject": None, "branch": None, "wall_ms": 0.0}
    if cmd.verb == "estimate":
        summary = {"fit": l0_pls(sample, exp.solver).to_dict()}
    elif cmd.verb == "test":
        outcome = run_test(exp.strategy, sample, exp.test, exp.solver)
        summary = {"outcome": outcome.to_dict()}
        row.update(statistic=outcome.statistic, reject=outcome.reject)
    else:
        if cfg.confset.construction == "sample_split":
            cs = sample_split_cs(sample, exp.cs, exp.solver)
        else:
            cs = two_radius_cs(sample, exp.cs, exp.solver, exp.test)
            row.update(statistic=cs.outcome.statistic, reject=cs.outcome.reject, branch=cs.branch)
        summary = {"confset": cs.to_dict()}
        if sample.theta_true is not None:
            row["covered"] = contains(cs, sample.theta_true)
        row["diameter_sq"] = cs.diameter_sq
    _write_json(out / "summary.json", summary)
    Report.from_rows([row]).write_csv(out / "replications.csv")
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cmd = parse_and_validate(argv)
    except UsageError as err:
        print(f"sparse-confset: {err}", file=sys.stderr)
        return 2
    try:
        return execute(cmd)
    except (ValueError, ArithmeticError, RuntimeError) as err:
        print(f"sparse-confset: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
