import os
import subprocess
import sys

import numpy as np
import pytest

from ouensemble.cli import main

SMALL = """\
[run]
seed = 5
workers = 1

[ensemble]
N = 10
R = 300
t_grid = logspace 1e-1 1e1 5

[tau]
kind = exponential
rate = 1

[sigma]
kind = generalized_gamma
nu = 0.5
eta = 1.3

[compare]
times = 1, 10

[correlation]
grid = 1, 10
"""


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL)
    return path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_help_via_module():
    res = subprocess.run([sys.executable, "-m", "ouensemble", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "usage:" in res.stdout and "compare" in res.stdout


def test_subcommand_help(capsys):
    with pytest.raises(SystemExit) as info:
        main(["kernel", "--help"])
    assert info.value.code == 0
    assert "--beta" in capsys.readouterr().out


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_missing_config(tmp_path, capsys):
    missing = tmp_path / "nope.cfg"
    code, _, err = run(["compare", "--config", missing], capsys)
    assert code == 2 and str(missing) in err


def test_unknown_key_is_line_anchored(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text(SMALL.replace("rate = 1", "rate = 1\nwobble = 3"))
    code, _, err = run(["compare", "--config", path], capsys)
    assert code == 2
    assert f"{path}:13" in err and "wobble" in err


def test_bad_value_is_line_anchored(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text(SMALL.replace("N = 10", "N = ten"))
    code, _, err = run(["simulate", "--config", path], capsys)
    assert code == 2 and f"{path}:6" in err


def test_simulate_outputs_and_determinism(cfg, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["simulate", "--config", cfg, "--seed", 42, "--out", a], capsys)[0] == 0
    assert run(["simulate", "--config", cfg, "--seed", 42, "--out", b, "--workers", 2], capsys)[0] == 0
    for name in ("Z.csv", "Zstar.csv", "ZH.csv", "config.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    lines = (a / "Z.csv").read_text().splitlines()
    assert lines[0] == "realization,t,value" and len(lines) == 1 + 300 * 6
    c = tmp_path / "c"
    run(["simulate", "--config", cfg, "--seed", 43, "--out", c], capsys)
    assert (a / "Z.csv").read_bytes() != (c / "Z.csv").read_bytes()


def test_simulate_binary_and_process_subset(cfg, tmp_path, capsys):
    code, out, _ = run(["simulate", "--config", cfg, "--out", tmp_path, "--process", "ZH",
                        "--format", "binary"], capsys)
    assert code == 0
    assert sorted(os.listdir(tmp_path)) == ["ZH.bin", "config.json", "small.cfg"]
    code, _, err = run(["simulate", "--config", cfg, "--out", tmp_path, "--process", "W"], capsys)
    assert code == 2


def test_env_seed_override(cfg, tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("RUN_SEED", "42")
    run(["simulate", "--config", cfg, "--out", tmp_path / "env", "--process", "Z"], capsys)
    monkeypatch.delenv("RUN_SEED")
    run(["simulate", "--config", cfg, "--out", tmp_path / "arg", "--process", "Z", "--seed", 42], capsys)
    assert (tmp_path / "env" / "Z.csv").read_bytes() == (tmp_path / "arg" / "Z.csv").read_bytes()


def test_compare_exit_codes(cfg, tmp_path, capsys):
    code, out, _ = run(["compare", "--config", cfg, "--out", tmp_path / "ok"], capsys)
    assert "ks_Z_ZH" in out
    assert (tmp_path / "ok" / "criteria.csv").exists()
    bad = tmp_path / "bad.cfg"
    bad.write_text(SMALL.replace("R = 300", "R = 2000\nzh_sigma0 = 0.4"))
    code, out, _ = run(["compare", "--config", bad, "--out", tmp_path / "bad"], capsys)
    assert code == 1 and "FAIL" in out


def test_kernel_command(tmp_path, capsys):
    code, _, _ = run(["kernel", "--beta", 1, "--H", 0.5, "--zmin", -4, "--zmax", 4, "--points", 81,
                      "--out", tmp_path], capsys)
    assert code == 0
    data = np.genfromtxt(tmp_path / "kernel.csv", delimiter=",", names=True, dtype=None, encoding=None)
    closed = data[data["kernel_id"] == "ggbm"]
    z = closed["z"]
    np.testing.assert_allclose(closed["density"], np.exp(-z * z / 4) / (2 * np.sqrt(np.pi)), atol=1e-10)
    assert np.trapezoid(closed["density"], z) == pytest.approx(1.0, abs=5e-3)


@pytest.mark.parametrize("argv", [["--zmin", 1, "--zmax", 1], ["--zmin", 2, "--zmax", 1],
                                  ["--beta", 1.5], ["--H", 1.0], ["--points", 1]])
def test_kernel_errors(argv, tmp_path, capsys):
    base = {"--beta": 0.5, "--H": 0.5, "--out": tmp_path}
    args = ["kernel"]
    given = dict(zip(argv[::2], argv[1::2]))
    for k, v in {**base, **given}.items():
        args += [k, v]
    assert run(args, capsys)[0] == 2


def test_correlate(cfg, tmp_path, capsys):
    code, out, _ = run(["correlate", "--config", cfg, "--out", tmp_path, "--pairs", "1:10,10:10"], capsys)
    assert code in (0, 1) and "correlation" in out
    assert len((tmp_path / "correlation.csv").read_text().splitlines()) == 3
    assert run(["correlate", "--config", cfg, "--out", tmp_path, "--pairs", ""], capsys)[0] == 2
    assert run(["correlate", "--config", cfg, "--out", tmp_path, "--pairs", "1-2"], capsys)[0] == 2


def test_clt_needs_two_sizes(cfg, tmp_path, capsys):
    assert run(["clt", "--config", cfg, "--out", tmp_path], capsys)[0] == 2


def test_bundled_config_by_name(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, _, err = run(["correlate", "--config", "correlation_delta.cfg", "--pairs", "1:2",
                        "--out", tmp_path / "o"], capsys)
    assert code in (0, 1), err
