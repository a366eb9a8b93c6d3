import json

import numpy as np

from csdecomp.cli import main
from csdecomp.matfile import read_matrix, write_matrix
from oracles import haar


def test_experiment_vanloan_json(tmp_path, capsys):
    out = tmp_path / "out.json"
    assert main(["experiment", "vanloan", "--json", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["passed"] and d["schemaVersion"] == 1
    assert set(d["maxima"]) == {"ortho_u1", "ortho_u2", "ortho_v1", "ortho_v2", "e11", "e12", "e21", "e22"}
    assert "PASS" in capsys.readouterr().out


def test_compute_identity(tmp_path):
    write_matrix(tmp_path / "x.mat", np.eye(6))
    rc = main(["compute", "--input", str(tmp_path / "x.mat"), "--p", "3", "--q", "2",
               "--output-dir", str(tmp_path / "f")])
    assert rc == 0
    np.testing.assert_array_equal(read_matrix(tmp_path / "f" / "theta.txt"), np.zeros((2, 1)))
    for name in ("U1.mat", "U2.mat", "V1.mat", "V2.mat", "report.json"):
        assert (tmp_path / "f" / name).exists()


def test_compute_then_verify(tmp_path):
    x = haar(np.random.default_rng(0), 11)
    write_matrix(tmp_path / "x.mat", x)
    args = ["compute", "--input", str(tmp_path / "x.mat"), "--p", "6", "--q", "4", "--output-dir",
            str(tmp_path / "f"), "--shift", "perfect", "--sort-theta"]
    assert main(args) == 0
    theta = read_matrix(tmp_path / "f" / "theta.txt").ravel()
    assert np.all(np.diff(theta) >= 0)
    rep = json.loads((tmp_path / "f" / "report.json").read_text())
    assert rep["passed"] and rep["iterations"] >= 1
    assert main(["verify", "--input", str(tmp_path / "x.mat"), "--factors", str(tmp_path / "f")]) == 0


def test_verify_detects_wrong_factors(tmp_path):
    rng = np.random.default_rng(1)
    x = haar(rng, 8)
    write_matrix(tmp_path / "x.mat", x)
    assert main(["compute", "--input", str(tmp_path / "x.mat"), "--p", "4", "--q", "4",
                 "--output-dir", str(tmp_path / "f")]) == 0
    write_matrix(tmp_path / "f" / "U1.mat", haar(rng, 4))
    assert main(["verify", "--input", str(tmp_path / "x.mat"), "--factors", str(tmp_path / "f")]) == 1


def test_verify_dimension_mismatch(tmp_path, capsys):
    write_matrix(tmp_path / "x.mat", np.eye(6))
    assert main(["compute", "--input", str(tmp_path / "x.mat"), "--p", "3", "--q", "3",
                 "--output-dir", str(tmp_path / "f")]) == 0
    write_matrix(tmp_path / "y.mat", np.eye(4))
    assert main(["verify", "--input", str(tmp_path / "y.mat"), "--factors", str(tmp_path / "f")]) == 2
    assert "error" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    assert main(["compute", "--input", str(tmp_path / "nope.mat"), "--p", "1", "--q", "1"]) == 2
    (tmp_path / "bad.mat").write_text("2 x\n")
    assert main(["compute", "--input", str(tmp_path / "bad.mat"), "--p", "1", "--q", "1"]) == 2
    write_matrix(tmp_path / "x.mat", np.eye(4))
    assert main(["compute", "--input", str(tmp_path / "x.mat"), "--p", "1", "--q", "2"]) == 2
    assert main(["experiment", "nope"]) == 2
    assert main([]) == 2
    assert main(["experiment", "haar", "--trials", "0"]) == 2
    err = capsys.readouterr().err
    assert "error" in err


def test_non_unitary_input_is_numerical_failure(tmp_path):
    write_matrix(tmp_path / "x.mat", 2 * np.eye(4))
    assert main(["compute", "--input", str(tmp_path / "x.mat"), "--p", "2", "--q", "2",
                 "--output-dir", str(tmp_path / "f")]) == 1


def test_experiment_small_run(capsys):
    assert main(["experiment", "angles-grid", "--trials", "3", "--seed", "5"]) == 0
    assert "trials=3" in capsys.readouterr().out
