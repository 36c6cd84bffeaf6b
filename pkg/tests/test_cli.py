from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pytest

from f2lab import io
from f2lab.cli import main
from f2lab.gf2_core import GroupSpec, span
from f2lab.setops import GroupSet
from f2lab.subspace_search import sharpness_witness


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


@pytest.fixture
def files(tmp_path):
    g = GroupSpec(2, 6)
    odd = GroupSet(g, g.dot_array(g.elements(), 1) == 1)
    io.write_set(tmp_path / "odd.json", odd)
    io.write_set(tmp_path / "sharp.json", sharpness_witness(6, 3))
    io.write_atomic(tmp_path / "V.json", io.dumps(io.subspace_to_json(span([2, 4], g))))
    return tmp_path


def test_set_verify_and_convert(files, capsys):
    code, out = run(capsys, "set", "verify", "--set", str(files / "odd.json"))
    rep = json.loads(out.out)
    assert code == 0 and rep["sum_free"] and rep["density"] == "1/2"
    code, _ = run(capsys, "set", "convert", "--set", str(files / "odd.json"), "--encoding", "points",
                  "--out", str(files / "pts.json"))
    assert code == 0 and io.read_set(files / "pts.json") == io.read_set(files / "odd.json")


def test_avoid_exit_codes(files, capsys):
    code, out = run(capsys, "avoid", "--set", str(files / "odd.json"), "--dim", "5")
    assert code == 0 and json.loads(out.out)["status"] == "found"
    code, out = run(capsys, "avoid", "--set", str(files / "sharp.json"), "--dim", "3")
    assert code == 1 and json.loads(out.out)["status"] == "none"


def test_conv_and_fk(files, capsys):
    code, out = run(capsys, "conv", "--a", str(files / "odd.json"))
    assert code == 0 and "counts" in json.loads(out.out)
    code, _ = run(capsys, "fk", "--set", str(files / "odd.json"), "--space", str(files / "V.json"), "--k", "2")
    assert code == 0


def test_ramsey_value_file_and_certificates(tmp_path, capsys):
    cert = tmp_path / "certs"
    code, _ = run(capsys, "ramsey", "--dims", "2,2", "--emit-certificates", str(cert), "--out",
                  str(tmp_path / "r.json"))
    rep = json.loads((tmp_path / "r.json").read_text())
    assert code == 0 and rep["value"] == 3 and rep["lower"] == 3 == rep["upper"]
    assert (cert / "witness_2-2_n2.json").exists()
    assert "UNSAT" in (cert / "unsat_2-2_n3.log").read_text()


def test_budget_exhaustion_exit_2(capsys):
    code, out = run(capsys, "--node-limit", "3", "ramsey", "--dims", "3,3", "--nmax", "4")
    assert code == 2 and json.loads(out.out)["value"] is None


def test_dichotomy_outputs(tmp_path, capsys):
    g = GroupSpec(2, 8)
    rng = np.random.default_rng(1)
    H = span([1 << i for i in range(7)], g)
    bits = np.zeros(g.order, dtype=bool)
    bits[H.elements()] = rng.random(H.size) < 0.8
    io.write_set(tmp_path / "a.json", GroupSet(g, bits))
    code, out = run(capsys, "dichotomy", "--sets", str(tmp_path / "a.json"), "--alpha", "1/4", "--gamma", "1/4",
                    "--csv", str(tmp_path / "t.csv"))
    rep = json.loads(out.out)
    assert code == 0 and rep["certified"] and rep["error"] is None
    assert (tmp_path / "t.csv").read_text().startswith("step,")


def test_pipeline_and_tables(files, capsys):
    code, out = run(capsys, "pipeline", "--sets", str(files / "odd.json"), "--d", "1")
    assert code == 0
    code, out = run(capsys, "ftable", "--n", "3", "--alphas", "1/2,1")
    assert code == 0 and out.out.splitlines()[0].startswith("n,alpha")
    code, out = run(capsys, "bounds", "--d", "10,20")
    assert code == 0 and "union_bound_lower" in out.out
    code, out = run(capsys, "niveau", "--n", "8", "--alpha", "1/4")
    assert code == 0 and json.loads(out.out)["gap"] >= 0
    code, out = run(capsys, "cover", "--p", "3", "--n", "3")
    assert code == 0


def test_pipeline_rejects_non_sum_free(tmp_path, capsys):
    g = GroupSpec(2, 4)
    io.write_set(tmp_path / "bad.json", GroupSet.from_points(g, [1, 2, 3]))
    code, out = run(capsys, "pipeline", "--sets", str(tmp_path / "bad.json"), "--d", "1")
    assert code == 1


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["avoid", "--dim", "2"],
        ["ramsey", "--dims", "0,2"],
        ["ramsey", "--dims", "x"],
        ["dichotomy", "--sets", "a.json", "--alpha", "2", "--gamma", "1/2"],
        ["ftable", "--n", "6", "--alphas", "1/2", "--exact"],
        ["avoid", "--set", "/nonexistent/s.json", "--dim", "1"],
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == 64


def test_malformed_file_is_usage_error(tmp_path, capsys):
    (tmp_path / "s.json").write_text(json.dumps(
        {"schema": io.SCHEMA, "kind": "set", "p": 2, "n": 2, "encoding": "hexmask", "data": "f1"}))
    assert main(["set", "verify", "--set", str(tmp_path / "s.json")]) == 64
    assert "data" in capsys.readouterr().err


def test_workers_env(monkeypatch, files, capsys):
    monkeypatch.setenv("F2LAB_WORKERS", "0")
    assert main(["set", "verify", "--set", str(files / "odd.json")]) == 64
    monkeypatch.setenv("F2LAB_WORKERS", "3")
    assert main(["set", "verify", "--set", str(files / "odd.json")]) == 0
    assert Fraction(json.loads(capsys.readouterr().out)["density"]) == Fraction(1, 2)
