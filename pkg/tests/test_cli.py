"""Command-line behavior: outputs, determinism, exit codes."""

import json

import numpy as np
import pytest

from volform.cli import main
from tests.conftest import admissible_tracefree


@pytest.fixture
def field_files(tmp_path):
    rng = np.random.default_rng(77)
    A = admissible_tracefree(rng)
    lin = tmp_path / "lin.json"
    lin.write_text(json.dumps({"type": "linear", "matrix": A.tolist()}))
    abc = tmp_path / "abc.json"
    abc.write_text(json.dumps({"type": "abc", "A": 1.0, "B": 0.7, "C": 0.43}))
    zero = tmp_path / "zero.json"
    zero.write_text(json.dumps({"type": "linear", "matrix": np.zeros((3, 3)).tolist()}))
    degenerate = tmp_path / "noa13.json"
    degenerate.write_text(json.dumps({"type": "linear", "matrix":
        [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.5, 0.0]]}))
    return {"lin": str(lin), "abc": str(abc), "zero": str(zero),
            "noa13": str(degenerate), "dir": tmp_path}


def test_classify_identity_pair(capsys):
    assert main(["classify", "--sigma", "1,2,3", "--Sigma", "1,2,3"]) == 0
    out = capsys.readouterr().out
    assert "class: S1" in out
    assert "tau: 1,2,3 (identity)" in out
    assert "sign(tau): +1" in out


def test_classify_se_pair(capsys):
    assert main(["classify", "--sigma", "3,2,1", "--Sigma", "1,2,3"]) == 0
    out = capsys.readouterr().out
    assert "class: SE" in out
    assert "sign(tau): -1" in out
    assert "x3 = d[x2] phi(x1, x2, X3)" in out


def test_classify_rejects_non_permutation(capsys):
    assert main(["classify", "--sigma", "1,1,2", "--Sigma", "1,2,3"]) == 2
    assert "E_CONFIG" in capsys.readouterr().err


def test_integrate_zero_field_rows_constant(field_files, capsys):
    out = field_files["dir"] / "traj.csv"
    rc = main(["integrate", "--field", field_files["zero"], "--scheme", "se-se",
               "--h", "0.1", "--steps", "10", "--x0", "0.5,0.25,-1.0",
               "--out", str(out), "--audit-every", "5"])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "step,t,x1,x2,x3,det_defect"
    assert len(lines) == 12
    for line in lines[1:]:
        cells = line.split(",")
        assert float(cells[2]) == 0.5
        assert float(cells[3]) == 0.25
        assert float(cells[4]) == -1.0
    audited = [line.split(",")[5] for line in lines[1:]]
    assert all(c == "" or float(c) == 0.0 for c in audited)
    assert sum(1 for c in audited if c != "") == 3  # steps 0, 5, 10


def test_integrate_deterministic(field_files):
    out1 = field_files["dir"] / "a.csv"
    out2 = field_files["dir"] / "b.csv"
    args = ["integrate", "--field", field_files["abc"], "--scheme", "dl-se",
            "--h", "0.01", "--steps", "40", "--x0", "0.1,0.2,0.3",
            "--audit-every", "20"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_integrate_missing_field_file(field_files, capsys):
    rc = main(["integrate", "--field", str(field_files["dir"] / "nope.json"),
               "--scheme", "se-se", "--h", "0.1", "--steps", "3",
               "--out", str(field_files["dir"] / "x.csv")])
    assert rc == 2
    assert "E_CONFIG" in capsys.readouterr().err


def test_integrate_bounded_linear_trajectory(field_files, tmp_path):
    # rotation-like field: trajectory stays bounded, defects tiny
    rot = tmp_path / "rot.json"
    rot.write_text(json.dumps({"type": "linear", "matrix":
        [[0.0, 1.0, 0.2], [-1.0, 0.0, 0.0], [0.1, 0.0, 0.0]]}))
    out = tmp_path / "rot.csv"
    rc = main(["integrate", "--field", str(rot), "--scheme", "se-se",
               "--h", "0.01", "--steps", "1000", "--x0", "1.0,0.0,0.0",
               "--out", str(out), "--audit-every", "100"])
    assert rc == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    xs = np.array([[float(c) for c in row[2:5]] for row in rows])
    assert np.max(np.abs(xs)) < 10.0
    defects = [float(row[5]) for row in rows if row[5] != ""]
    assert max(defects) <= 1e-10


def test_volcheck_pass_and_fail(field_files, capsys):
    rc = main(["volcheck", "--field", field_files["lin"], "--scheme", "se-se",
               "--h", "0.1", "--samples", "25", "--seed", "3",
               "--fail-above", "1e-10"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "max_defect=" in out

    rc = main(["volcheck", "--field", field_files["lin"], "--scheme", "euler",
               "--h", "0.1", "--samples", "25", "--seed", "3",
               "--fail-above", "1e-10"])
    assert rc == 1


def test_volcheck_writes_csv(field_files):
    out = field_files["dir"] / "audit.csv"
    rc = main(["volcheck", "--field", field_files["abc"], "--scheme", "dl-dl",
               "--h", "0.01", "--samples", "10", "--seed", "5",
               "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "point,defect"
    assert len(lines) == 11


def test_volcheck_zero_field(field_files, capsys):
    rc = main(["volcheck", "--field", field_files["zero"], "--scheme", "s1-quispel",
               "--h", "0.1", "--samples", "5", "--seed", "1"])
    assert rc == 0
    assert "max_defect=0.0" in capsys.readouterr().out


def test_order_s1(field_files, capsys):
    out = field_files["dir"] / "order.txt"
    rc = main(["order", "--field", field_files["lin"], "--scheme", "s1-quispel",
               "--h0", "0.2", "--levels", "4", "--T", "1.0",
               "--x0", "0.3,-0.2,0.5", "--out", str(out)])
    assert rc == 0
    slope = float(capsys.readouterr().out.split("fitted slope:")[1])
    assert 0.9 <= slope <= 1.1
    assert "fitted slope" in out.read_text()


def test_order_rk4_baseline(field_files, capsys):
    rc = main(["order", "--field", field_files["lin"], "--scheme", "rk4",
               "--h0", "0.4", "--levels", "4", "--T", "1.0",
               "--x0", "0.3,-0.2,0.5"])
    assert rc == 0
    slope = float(capsys.readouterr().out.split("fitted slope:")[1])
    assert slope == pytest.approx(4.0, abs=0.3)


def test_order_single_level(field_files, capsys):
    rc = main(["order", "--field", field_files["lin"], "--scheme", "euler",
               "--h0", "0.1", "--levels", "1", "--T", "1.0"])
    assert rc == 0
    assert "no pairwise order" in capsys.readouterr().out


def test_degenerate_scheme_exit_code(field_files, capsys):
    rc = main(["volcheck", "--field", field_files["noa13"], "--scheme", "s1-quispel",
               "--h", "0.1", "--samples", "5", "--seed", "1"])
    assert rc == 3
    assert "E_DEGENERATE" in capsys.readouterr().err


def test_scheme_field_mismatch_exit_code(field_files, capsys):
    rc = main(["volcheck", "--field", field_files["abc"], "--scheme", "s2-quispel",
               "--h", "0.1", "--samples", "5", "--seed", "1"])
    assert rc == 2
    assert "E_CONFIG" in capsys.readouterr().err


def test_newton_tol_env_override(field_files, monkeypatch, capsys):
    monkeypatch.setenv("VOLFORM_NEWTON_TOL", "1e-9")
    rc = main(["volcheck", "--field", field_files["abc"], "--scheme", "se-se",
               "--h", "0.01", "--samples", "5", "--seed", "2"])
    assert rc == 0
    monkeypatch.setenv("VOLFORM_NEWTON_TOL", "banana")
    rc = main(["volcheck", "--field", field_files["abc"], "--scheme", "se-se",
               "--h", "0.01", "--samples", "5", "--seed", "2"])
    assert rc == 2
    assert "E_CONFIG" in capsys.readouterr().err


def test_quad_potentials_field_spec(field_files, tmp_path):
    from volform.fields import LinearField, linear_potentials

    rng = np.random.default_rng(11)
    A = admissible_tracefree(rng)
    trip = linear_potentials(LinearField(A), (1, 3))
    spec = {"type": "quad-potentials",
            "F1": trip.F1.quad.to_serial(),
            "F3": trip.F3.quad.to_serial()}
    path = tmp_path / "quad.json"
    path.write_text(json.dumps(spec))
    out = tmp_path / "quad.csv"
    rc = main(["integrate", "--field", str(path), "--scheme", "se-se",
               "--h", "0.1", "--steps", "5", "--x0", "0.3,0.1,-0.2",
               "--out", str(out)])
    assert rc == 0
    assert len(out.read_text().splitlines()) == 7


def test_invalid_h_rejected(field_files, capsys):
    rc = main(["integrate", "--field", field_files["lin"], "--scheme", "se-se",
               "--h", "-0.1", "--steps", "3",
               "--out", str(field_files["dir"] / "x.csv")])
    assert rc == 2
