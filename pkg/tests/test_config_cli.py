import csv
import hashlib
import re

import numpy as np
import pytest

from ris import __version__
from ris.cli import TRAJECTORY_COLUMNS, main
from ris.config import ConfigError, parse_config, resolve_path
from ris.grid import Grid, ScalarField, edge_lipschitz, read_field, write_field

BUNDLED = ["bar1d", "notch2d", "static", "oracle3", "toy_compare"]


def bundled_text(name):
    return resolve_path(f"{name}.cfg").read_text()


def write_cfg(tmp_path, text, name="case.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_configs_parse(name):
    cfg = parse_config(f"{name}.cfg")
    assert cfg.name == name
    assert (cfg.scenario is None) != (cfg.toy is None)
    assert cfg.content_hash == hashlib.sha256(bundled_text(name).encode()).hexdigest()


def test_model_constraints_reported(tmp_path):
    text = bundled_text("notch2d")
    bad = re.sub(r"(?m)^alpha = .*$", "alpha = 2", text)
    with pytest.raises(ConfigError, match=re.escape("alpha must satisfy α > d (d=2)")):
        parse_config(write_cfg(tmp_path, bad))
    bad = re.sub(r"(?m)^beta = .*$", "beta = 4", text)
    with pytest.raises(ConfigError, match=re.escape("beta must satisfy β > α + κ")):
        parse_config(write_cfg(tmp_path, bad))


def test_unknown_keys_and_sections_rejected(tmp_path):
    text = bundled_text("static")
    with pytest.raises(ConfigError, match="unknown key model.gamma"):
        parse_config(write_cfg(tmp_path, text.replace("[model]\n", "[model]\ngamma = 1\n")))
    with pytest.raises(ConfigError, match=r"unknown section \[extra\]"):
        parse_config(write_cfg(tmp_path, text + "\n[extra]\nx = 1\n"))


def test_missing_config_is_an_error(tmp_path):
    with pytest.raises((ConfigError, OSError)):
        parse_config(tmp_path / "nope.cfg")


# -- CLI ----------------------------------------------------------------------------------
def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_cli_run_static(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "static.cfg", "-o", str(out), "-q"]) == 0
    rows = read_rows(out / "trajectory.csv")
    assert list(rows[0]) == TRAJECTORY_COLUMNS
    assert len(rows) == 11 and rows[-1]["k"] == "10"
    cert = (out / "certificate.txt").read_text().splitlines()
    digest = hashlib.sha256(bundled_text("static").encode()).hexdigest()
    assert f"config_sha256 {digest}" in cert
    assert f"ris_version {__version__}" in cert
    assert cert[-1] == "CERTIFICATE PASS"
    z = read_field(out / "fields" / "step_10.risfield")
    y = read_field(out / "fields" / "step_10_y.risfield", as_vector=True)
    assert isinstance(z, ScalarField) and y.values.shape == (8, 1)


def test_cli_run_is_deterministic_across_worker_counts(tmp_path, monkeypatch):
    outs = []
    for n in ("1", "4"):
        monkeypatch.setenv("RIS_THREADS", n)
        out = tmp_path / f"w{n}"
        assert main(["run", "oracle3.cfg", "-o", str(out), "-q"]) == 0
        outs.append(out)
    for f in ("trajectory.csv", "certificate.txt"):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()


def test_cli_solver_failure_exit_code(tmp_path):
    text = bundled_text("bar1d").replace("[solver.y]\n", "[solver.y]\nmax_iters = 1\n")
    text = re.sub(r"(?m)^N = .*$", "N = 4", text)
    cfg = write_cfg(tmp_path, text)
    assert main(["run", str(cfg), "-o", str(tmp_path / "out"), "-q"]) == 1


def test_cli_bad_input_exit_code(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.cfg"), "-q"]) == 1
    assert main(["run", "toy_compare.cfg", "-q"]) == 1
    assert "error" in capsys.readouterr().err


def test_cli_compare(tmp_path):
    out = tmp_path / "cmp"
    assert main(["compare", "toy_compare.cfg", "-o", str(out), "-q"]) == 0
    summary = dict(line.split(" ", 1) for line in
                   (out / "compare_summary.txt").read_text().splitlines())
    assert summary["onset_energetic"] == "20" and summary["onset_alternating"] == "39"
    assert len(read_rows(out / "compare.csv")) == 41


def test_cli_sweep_static(tmp_path):
    out = tmp_path / "sw"
    assert main(["sweep", "static.cfg", "--taus", "2,4", "-o", str(out), "-q"]) == 0
    assert len(read_rows(out / "sweep.csv")) == 2
    assert main(["sweep", "static.cfg", "--taus", "2,3", "-o", str(out), "-q"]) == 1


def test_cli_truncate(tmp_path):
    g = Grid((1.0,), (11,))
    src = tmp_path / "ramp.risfield"
    write_field(src, ScalarField(g, np.clip(3 * g.axes[0], 0, 1)))
    assert main(["truncate", str(src), "--lambda", "1", "-q"]) == 0
    res = read_field(tmp_path / "ramp.truncated.risfield")
    assert edge_lipschitz(g, res.values) <= 1 + 1e-12
    const = tmp_path / "const.risfield"
    write_field(const, ScalarField(g, np.full(11, 0.7)))
    dst = tmp_path / "c_out.risfield"
    assert main(["truncate", str(const), "--lambda", "0.5", "-o", str(dst), "-q"]) == 0
    assert dst.read_bytes() == const.read_bytes()
    assert main(["truncate", str(src), "--lambda", "0", "-q"]) == 1
    assert main(["truncate", str(tmp_path / "none.risfield"), "--lambda", "1", "-q"]) == 1


def test_cli_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out
