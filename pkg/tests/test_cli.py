import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from xxzlab import cli


def run(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_jacobi_example(capsys):
    code, out, _ = run(capsys, "jacobi", "--delta", "1.25", "--r", "0.5", "--half-width", "60", "--k", "6")
    assert code == 0
    row, = table(out)
    assert float(row["gap"]) == pytest.approx(0.39100031726854567, abs=1e-10)
    assert float(row["continuum_edge"]) == pytest.approx(0.4)


def test_groundstate_example(capsys):
    code, out, _ = run(capsys, "groundstate-check", "--two-j", "1", "--sites", "2", "--delta", "1.25")
    assert code == 0
    rows = table(out)
    assert [r["two_m"] for r in rows] == ["-2", "0", "2"]
    assert all(float(r["residual"]) <= 1e-10 for r in rows)


def test_delta_validation(capsys):
    code, _, err = run(capsys, "jacobi", "--delta", "0.9", "--half-width", "5")
    assert code == 2
    assert "delta must exceed 1" in err
    assert "usage: xxzlab jacobi" in err


def test_phase_diagram_rejects_bad_grid(capsys):
    code, _, err = run(capsys, "phase-diagram", "--delta-inv", "0.5,1.2", "--half-width", "5")
    assert code == 2 and "delta must exceed 1" in err


@pytest.mark.parametrize("argv", [[], ["nope"], ["jacobi", "--window", "3:1"],
                                  ["jacobi", "--k", "x"], ["converge", "--psi", "0"]])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error:" in err


@pytest.mark.parametrize("command", sorted(cli.COMMANDS))
def test_help(capsys, command):
    code, out, _ = run(capsys, command, "--help")
    assert code == 0
    assert cli.COMMANDS[command].split()[0] in out


def test_argument_types():
    assert cli.window_type("-2:3") == (-2, 3)
    assert cli.int_list("1-3,8") == [1, 2, 3, 8]
    assert cli.int_list("-1,2") == [-1, 2]
    np.testing.assert_allclose(cli.grid_type("0:1:3"), [0, 0.5, 1])
    assert cli.occupation_type("0:1,2:3") == {0: 1, 2: 3}


def test_bounds_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    s = tmp_path / "s.json"
    for p in (a, b):
        assert run(capsys, "bounds", "--n-reports", "30", "--out", str(p), "--summary", str(s))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(s.read_text())["failed"] == 0
    assert len(table(a.read_text())) == 30


def test_json_format(capsys):
    code, out, _ = run(capsys, "jacobi", "--half-width", "20", "--format", "json")
    obj = json.loads(out)
    assert code == 0 and set(obj) == {"header", "rows", "summary"}


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# shared\ndelta = 2.0\n[jacobi]\nhalf-width = 20\nk = 3\n")
    _, out, _ = run(capsys, "jacobi", "--config", str(cfg))
    row, = table(out)
    assert float(row["delta_inv"]) == 0.5
    assert "eig2" in row and "eig3" not in row
    _, out, _ = run(capsys, "jacobi", "--config", str(cfg), "--delta", "1.25")
    assert float(table(out)[0]["delta_inv"]) == 0.8


@pytest.mark.parametrize("text", ["bogus = 1\n", "[nope]\nk = 1\n", "[jacobi]\nboundary = x\n", "k\n"])
def test_config_rejects_unknown(tmp_path, capsys, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    code, _, err = run(capsys, "jacobi", "--config", str(cfg))
    assert code == 2 and "error:" in err


def test_threads_env(monkeypatch, capsys):
    monkeypatch.setenv("XXZLAB_THREADS", "2")
    code, out, _ = run(capsys, "phase-diagram", "--delta-inv", "0.5", "--r-grid", "0,0.5", "--half-width", "10")
    assert code == 0 and len(table(out)) == 2


def test_small_subcommands(capsys, tmp_path):
    spectrum = tmp_path / "spec.csv"
    assert run(capsys, "boson-compare", "--spectrum-out", str(spectrum), "--N", "1")[0] == 0
    assert spectrum.exists()
    assert run(capsys, "spin-gap", "--two-j", "1", "--sites", "4", "--M", "0")[0] == 0
    assert run(capsys, "converge", "--two-j", "4,8,16")[0] == 0
    assert run(capsys, "concentrate", "--two-j", "4,8")[0] == 0
    assert run(capsys, "conjecture", "--two-j", "1-3")[0] == 0
    assert run(capsys, "clt", "--two-j", "2,8", "--n-vectors", "1")[0] == 0
    code, _, err = run(capsys, "pinned", "--two-j", "4", "--E-max", "5")
    assert code == 2 and "pinning too weak" in err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "xxzlab", "jacobi", "--half-width", "5"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("delta_inv")
