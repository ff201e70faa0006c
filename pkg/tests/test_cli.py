import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from qszego.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, EXIT_USAGE, main
from qszego.heisenberg import LatticeSpec
from qszego.projection import SampledFunction


def run(argv):
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code


@pytest.fixture
def points_csv(tmp_path):
    p = tmp_path / "pts.csv"
    p.write_text("t1,t2,t3,y1,y2,y3,y4\n"
                 "1,0,0,0,0,0,0\n"
                 "0,0,0,0,0,0,0\n"
                 "0,0,0,0.5,0,0,0\n")
    return p


def test_eval_flags_singular_row(points_csv, tmp_path):
    out = tmp_path / "k.csv"
    assert run(["eval", "--in", str(points_csv), "--out", str(out)]) == EXIT_FAIL
    rows = list(csv.DictReader(out.open()))
    assert rows[0]["status"] == "ok" and float(rows[0]["K2"]) == 4.0
    assert rows[1]["status"].startswith("error")
    assert float(rows[2]["K1"]) == pytest.approx(12 / 0.25 ** 5)


def test_eval_eps_all_ok(points_csv, tmp_path):
    out = tmp_path / "k.csv"
    assert run(["eval", "--in", str(points_csv), "--eps", "0.5", "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert float(rows[1]["K1"]) == pytest.approx(12 * 0.5 ** -5)


def test_bad_csv_is_input_error(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("t1,t2,t3,y1,y2,y3,y4\n1,0,0,0,0,0\n")
    assert run(["eval", "--in", str(p)]) == EXIT_INPUT
    assert "line 2" in capsys.readouterr().err


def test_missing_file_is_input_error(tmp_path):
    assert run(["eval", "--in", str(tmp_path / "nope.csv")]) == EXIT_INPUT


def test_usage_errors():
    assert run(["verify", "--n", "1"]) == EXIT_USAGE
    assert run(["verify", "--threads", "0"]) == EXIT_USAGE
    assert run(["scan"]) == EXIT_USAGE
    assert run(["verify", "--claim", "bogus"]) == EXIT_USAGE
    assert run(["verify", "--c", "lots"]) == EXIT_USAGE
    assert run([]) == EXIT_USAGE


def test_verify_is_reproducible(tmp_path):
    args = ["verify", "--claim", "homogeneity,witness,nonvanishing", "--samples", "256", "--seed", "4"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(args + ["--out", str(a)]) == EXIT_OK
    assert run(args + ["--out", str(b), "--threads", "4"]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["pass"] is True


def test_scan_single_claim(tmp_path):
    out = tmp_path / "s.json"
    assert run(["scan", "--claim", "size_bound", "--samples", "1024", "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["sup"] == pytest.approx(12, rel=1e-6)


def test_project_command(tmp_path):
    spec = LatticeSpec(1.0, 0.5, 0.5, 0.1)
    f = SampledFunction.from_callable(lambda p: np.tile([1.0, 0, 0.5, 0], (len(p), 1)), spec, 2)
    src = tmp_path / "f.csv"
    f.to_csv(src)
    outs = []
    for th in ("1", "4"):
        out = tmp_path / f"p{th}.json"
        args = ["project", "--in", str(src), "--radius", "1.0", "--hy", "0.5", "--ht", "0.5", "--exclusion", "0.1",
                "--point", "0.01,0,0,0.05,0,0,0", "--threads", th, "--out", str(out)]
        assert run(args) == EXIT_OK
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    rec = json.loads(outs[0])
    assert rec["runtime_ms"] is None and len(rec["value"]) == 4


def test_project_bad_point(tmp_path):
    spec = LatticeSpec(1.0, 0.8, 0.8, 0.1)
    src = tmp_path / "f.csv"
    SampledFunction.from_callable(lambda p: np.ones((len(p), 4)), spec, 2).to_csv(src)
    assert run(["project", "--in", str(src), "--point", "1,2"]) == EXIT_USAGE


def test_lower_bound(tmp_path):
    out = tmp_path / "lb.json"
    assert run(["lower-bound", "--samples", "300", "--out", str(out)]) == EXIT_OK
    rec = json.loads(out.read_text())
    assert rec["pass"] and rec["ball_pair"]["inf"] > 0 and rec["nonvanishing"]["pass"]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qszego.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "reproduce" in res.stdout
