import json
import subprocess
import sys

import numpy as np
import pytest
import scipy.io

from conftest import jordan_matrix
from gkschur.cli import main
from gkschur.lab import deflation_pitfall_pair, gk_split_pair
from gkschur.matrixio import read_matrix, write_matrix


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def mats(tmp_path):
    paths = {}
    T0, B = deflation_pitfall_pair(1e-3)
    for name, M in {"t0": T0, "b": B, "j2": jordan_matrix([(0, 2)])}.items():
        paths[name] = tmp_path / f"{name}.json"
        write_matrix(paths[name], M)
    return paths


def test_analyze(capsys, mats):
    code, out, _ = run(capsys, "analyze", mats["j2"])
    assert code == 0
    res = json.loads(out)
    assert res["gk"]["m"][:1] == [2]


def test_analyze_matrix_market(capsys, tmp_path):
    p = tmp_path / "a.mtx"
    scipy.io.mmwrite(str(p), jordan_matrix([(0, 2), (1, 1)]).real)
    code, out, _ = run(capsys, "analyze", p)
    assert code == 0
    assert json.loads(out)["gk"]["m"][:2] == [3, 0]


def test_gap(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    write_matrix(a, np.array([[1.0], [0.0], [0.0]]))
    write_matrix(b, np.array([[1.0], [0.0], [1.0]]) / np.sqrt(2))
    code, out, _ = run(capsys, "gap", a, b)
    assert code == 0 and json.loads(out)["gap"] == pytest.approx(1 / np.sqrt(2))
    code, out, _ = run(capsys, "gap", a, b, "--semi")
    assert json.loads(out)["semigap"] == pytest.approx(1 / np.sqrt(2))


def test_match_writes_factors(capsys, mats, tmp_path):
    prefix = tmp_path / "pit"
    code, out, _ = run(capsys, "match", mats["t0"], mats["b"], "--mode", "lipschitz", "--out-prefix", prefix)
    assert code == 0
    U = read_matrix(f"{prefix}_U.json")
    T = read_matrix(f"{prefix}_T.json")
    B = read_matrix(mats["b"])
    assert np.allclose(U @ T @ U.conj().T, B, atol=1e-14)
    assert json.loads(out)["distance"] < 3e-3


def test_match_holder(capsys, tmp_path):
    T0, B = gk_split_pair(1e-6)
    write_matrix(tmp_path / "t.json", T0)
    write_matrix(tmp_path / "b.json", B)
    code, out, _ = run(capsys, "match", tmp_path / "t.json", tmp_path / "b.json", "--mode", "holder")
    assert code == 0
    assert json.loads(out)["residuals"]["reconstruction"] < 1e-10


def test_match_structure_mismatch(capsys, tmp_path):
    write_matrix(tmp_path / "t.json", jordan_matrix([(0, 2)]))
    write_matrix(tmp_path / "b.json", np.diag([0.0, 1.0]))
    code, _, err = run(capsys, "match", tmp_path / "t.json", tmp_path / "b.json")
    assert code == 3 and "gkschur:" in err


def test_frobenius(capsys, tmp_path):
    T0, _ = gk_split_pair(1e-3)
    write_matrix(tmp_path / "t.json", T0)
    code, out, _ = run(capsys, "frobenius", tmp_path / "t.json")
    assert code == 0
    assert json.loads(out)["block_map"] == [[3, 2, 1, 0], [6, 5, 4]]


def test_invalid_inputs(capsys, tmp_path):
    code, _, _ = run(capsys, "analyze", tmp_path / "missing.json")
    assert code == 2
    (tmp_path / "bad.json").write_text("{not json")
    assert run(capsys, "analyze", tmp_path / "bad.json")[0] == 2
    write_matrix(tmp_path / "rect.json", np.ones((2, 3)))
    assert run(capsys, "analyze", tmp_path / "rect.json")[0] == 2
    write_matrix(tmp_path / "full.json", np.ones((2, 2)))
    assert run(capsys, "frobenius", tmp_path / "full.json")[0] == 2


def test_experiment_writes_json_and_csv(capsys, mats, tmp_path):
    out = tmp_path / "rep.json"
    argv = ["experiment", "--base", mats["j2"], "--kind", "same_jordan", "--scales", "1e-3,1e-5,1e-7",
            "--trials", "2", "--seed", "4", "--out", out]
    assert run(capsys, *argv)[0] == 0
    rep = json.loads(out.read_text())
    assert 0.95 <= rep["fitted_exponent"] <= 1.05
    rows = out.with_suffix(".csv").read_text().splitlines()
    assert rows[0] == "scale,input_distance,schur_distance" and len(rows) == 4
    first = out.read_text()
    assert run(capsys, *argv)[0] == 0
    assert out.read_text() == first


def test_experiment_rejects_bad_scales(capsys, mats):
    code = run(capsys, "experiment", "--base", mats["j2"], "--kind", "generic", "--scales", "0")[0]
    assert code == 2


@pytest.mark.parametrize("name", ["example-2.4", "pitfall-3", "example-4.1", "gk-figure"])
def test_repro(capsys, tmp_path, name):
    out = tmp_path / f"{name}.json"
    assert run(capsys, "repro", name, "--out", out)[0] == 0
    assert json.loads(out.read_text())


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gkschur.cli", "repro", "gk-figure"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["k"][:5] == [4, 3, 3, 1, 1]
