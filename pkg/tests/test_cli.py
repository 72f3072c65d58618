import json

import pytest

from sparse_confset.cli import THREADS_ENV, UsageError, main, parse_and_validate

CONFIG = """
[design]
kind = "iid_gaussian"
n = 60
p = 15

[signal]
kind = "sparse"
k = 2
amplitude = 1.0

[test]
strategy = "residual_chisq"
k0 = 2
k1 = 5

[confset]
construction = "two_radius"

[mc]
replications = 6
base_seed = 3
"""


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text(CONFIG)
    return path


def test_parse_confset(cfg_path, tmp_path):
    cmd = parse_and_validate(["confset", "--config", str(cfg_path), "--out", str(tmp_path / "results")])
    assert cmd.verb == "confset"
    assert cmd.config_path == cfg_path
    assert cmd.output_dir == tmp_path / "results"
    assert cmd.threads == 1


def test_unknown_key_exit_2(cfg_path, tmp_path, capsys):
    code = main(["test", "--config", str(cfg_path), "--out", str(tmp_path / "o"), "--set", "test.bogus=1"])
    assert code == 2
    assert "test.bogus" in capsys.readouterr().err
    cfg_path.write_text(CONFIG + "\n[extra]\nx = 1\n")
    assert main(["test", "--config", str(cfg_path), "--out", str(tmp_path / "o")]) == 2


def test_usage_errors(cfg_path, tmp_path, monkeypatch):
    with pytest.raises(UsageError):
        parse_and_validate(["fly", "--config", str(cfg_path), "--out", str(tmp_path)])
    with pytest.raises(UsageError):
        parse_and_validate(["test", "--config", str(tmp_path / "missing.toml"), "--out", str(tmp_path)])
    with pytest.raises(UsageError, match="design.n"):
        parse_and_validate(["test", "--config", str(cfg_path), "--out", str(tmp_path), "--set", "design.n=1"])
    monkeypatch.setenv(THREADS_ENV, "3")
    assert parse_and_validate(["test", "--config", str(cfg_path), "--out", str(tmp_path)]).threads == 3
    assert parse_and_validate(["test", "--config", str(cfg_path), "--out", str(tmp_path), "--threads", "2"]).threads == 2


def test_override_round_trip(cfg_path, tmp_path):
    out = tmp_path / "o"
    assert main(["coverage", "--config", str(cfg_path), "--out", str(out), "--set", "mc.replications=4"]) == 0
    eff = json.loads((out / "effective_config.json").read_text())
    assert eff["mc"]["replications"] == 4
    assert json.loads((out / "summary.json").read_text())["replications"] == 4
    assert len((out / "replications.csv").read_text().splitlines()) == 5


def test_rerun_from_effective_config(cfg_path, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["coverage", "--config", str(cfg_path), "--out", str(a)]) == 0
    assert main(["coverage", "--config", str(a / "effective_config.json"), "--out", str(b), "--threads", "2"]) == 0
    assert (a / "replications.csv").read_bytes() == (b / "replications.csv").read_bytes()


def test_twice_byte_identical(cfg_path, tmp_path):
    for d in ("x", "y"):
        assert main(["coverage", "--config", str(cfg_path), "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "x" / "replications.csv").read_bytes() == (tmp_path / "y" / "replications.csv").read_bytes()
    summary = json.loads((tmp_path / "x" / "summary.json").read_text())
    assert 0 <= summary["coverage_rate"] <= 1 and summary["branch_rate"] == summary["reject_rate"]


@pytest.mark.parametrize("verb,key", [("estimate", "fit"), ("test", "outcome"), ("confset", "confset")])
def test_single_sample_verbs(cfg_path, tmp_path, verb, key):
    out = tmp_path / verb
    assert main([verb, "--config", str(cfg_path), "--out", str(out)]) == 0
    assert key in json.loads((out / "summary.json").read_text())
    assert (out / "replications.csv").exists()


def test_data_file(cfg_path, tmp_path):
    from sparse_confset import DesignSpec, generate_sparse_signal, sample_model
    from sparse_confset.io import write_sample_csv

    data = tmp_path / "d.csv"
    write_sample_csv(sample_model(DesignSpec.iid_gaussian(40, 15), generate_sparse_signal(15, 2), 1), data)
    assert main(["test", "--config", str(cfg_path), "--out", str(tmp_path / "o"), "--data", str(data)]) == 0


def test_boundary(cfg_path, tmp_path):
    out = tmp_path / "o"
    code = main(["boundary", "--config", str(cfg_path), "--out", str(out),
                 "--set", "scan.rho_consts=[0.5, 2.0, 8.0]", "--set", "mc.replications=4"])
    assert code == 0
    assert len((out / "boundary.csv").read_text().splitlines()) == 4


def test_infeasible_exit_1(cfg_path, tmp_path, capsys):
    # an l1 budget too small for the spikes cannot be met
    code = main(["coverage", "--config", str(cfg_path), "--out", str(tmp_path / "o"),
                 "--set", "signal.kind=separated", "--set", "signal.rho=1.0",
                 "--set", "signal.r_norm=1", "--set", "signal.M=0.5"])
    assert code == 1
    assert "InfeasibleSignalError" in capsys.readouterr().err
