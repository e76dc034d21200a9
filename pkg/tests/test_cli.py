import json
from pathlib import Path

import pytest

from jumpput import __version__
from jumpput.cli import main

SMALL = ["--grid.nx", "64", "--grid.nt", "64"]


def read_config_comment(path: Path) -> dict:
    for line in path.read_text().splitlines():
        if line.startswith("# config "):
            return json.loads(line[len("# config "):])
    raise AssertionError("no config comment line")


def test_solve_writes_artifacts(tmp_path):
    out = tmp_path / "out"
    assert main(["solve", "--out", str(out)] + SMALL) == 0
    for name in ("surface.csv", "boundary.csv", "solve_summary.json"):
        assert (out / name).exists()
    first = (out / "boundary.csv").read_text().splitlines()[0]
    assert first == f"# version {__version__}"
    conf = read_config_comment(out / "boundary.csv")
    assert conf["grid"]["nx"] == 64
    summary = json.loads((out / "solve_summary.json").read_text())
    assert summary["version"] == __version__
    assert summary["price_at_S0"] > 0.0


def test_solve_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["solve", "--out", str(a), "--seed", "3"] + SMALL) == 0
    assert main(["solve", "--out", str(b), "--seed", "3"] + SMALL) == 0
    for name in ("surface.csv", "boundary.csv", "solve_summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_iterate_command(tmp_path):
    out = tmp_path / "out"
    args = ["iterate", "--out", str(out), "--market.lam", "0.3",
            "--jump.kind", "merton", "--jump.m", "-0.1", "--jump.s", "0.2",
            "--market.T", "0.5"] + SMALL
    assert main(args) == 0
    body = (out / "iterate.csv").read_text().splitlines()
    assert body[2] == "n,sup_diff,b_at_T,b_at_eps"
    assert body[3].split(",")[0] == "1"
    summary = json.loads((out / "iterate_summary.json").read_text())
    assert summary["converged_at"] is not None


def test_diagnose_command(tmp_path):
    out = tmp_path / "out"
    assert main(["diagnose", "--out", str(out)] + SMALL) == 0
    header = (out / "diagnose.csv").read_text().splitlines()[2]
    assert header == ("t,b,B,smooth_fit_residual,uxx_gap,"
                      "bprime_formula,bprime_fd")
    rep = json.loads((out / "diagnose.json").read_text())
    assert "b0_limit_expected" in rep


def test_mc_command(tmp_path):
    out = tmp_path / "out"
    args = ["mc", "--out", str(out), "--mc.n_paths", "5000",
            "--mc.n_steps", "32"] + SMALL
    assert main(args) == 0
    summary = json.loads((out / "mc_summary.json").read_text())
    assert summary["european"]["se"] > 0.0
    assert summary["policy"]["mean"] > summary["european"]["mean"] - 0.5


def test_volterra_command(tmp_path):
    out = tmp_path / "out"
    assert main(["volterra", "--out", str(out)] + SMALL) == 0
    summary = json.loads((out / "volterra_summary.json").read_text())
    assert summary["v_positive"] is True


def test_config_file_and_override_precedence(tmp_path):
    cfgfile = tmp_path / "c.yaml"
    cfgfile.write_text("grid:\n  nx: 64\n  nt: 64\nmarket:\n  r: 0.03\n")
    out = tmp_path / "out"
    assert main(["solve", "--config", str(cfgfile), "--out", str(out),
                 "--market.r", "0.04"]) == 0
    conf = read_config_comment(out / "boundary.csv")
    assert conf["market"]["r"] == 0.04  # CLI override wins over the file


def test_unknown_override_exits_2(tmp_path):
    assert main(["solve", "--out", str(tmp_path), "--grid.nz", "10"]) == 2
    assert main(["solve", "--out", str(tmp_path), "--frobnicate", "1"]) == 2


def test_missing_config_exits_2(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_invalid_market_exits_2(tmp_path):
    assert main(["solve", "--out", str(tmp_path),
                 "--market.r", "-0.05"] + SMALL) == 2


def test_numerical_failure_exits_3(tmp_path):
    # Kou with eta1 <= 1 has no finite exponential moment: the solve starts
    # but the drift computation fails, which is a numerical error, not a
    # configuration shape error
    args = ["solve", "--out", str(tmp_path), "--market.lam", "0.1",
            "--jump.kind", "kou", "--jump.eta1", "0.8"] + SMALL
    assert main(args) == 3
