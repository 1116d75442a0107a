import json
import subprocess
import sys

import pytest

from conegeo import __version__
from conegeo.cli import dispatch


def run(capsys, *argv):
    code = dispatch(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


@pytest.fixture
def seg_spec(tmp_path):
    p = tmp_path / "seg.json"
    p.write_text(json.dumps({"n": 2, "Q0": [[1, 0], [0, 1]], "generators": [[[1, 0], [0, -1]]]}))
    return str(p)


@pytest.fixture
def pd_file(tmp_path):
    p = tmp_path / "x.json"
    p.write_text(json.dumps({"n": 2, "upper": [2.0, 0.5, 1.0]}))
    return str(p)


class TestDocuments:
    def test_envelope(self, capsys):
        doc = run_json(capsys, "permuto", "fvector", "--n", "3")
        assert doc["op"] == "permuto"
        assert doc["version"] == __version__
        assert doc["value"]["f"] == [24, 36, 14, 1]
        assert doc["inputs"]["n"] == 3
        assert "total_s" in doc["diagnostics"]["timings"]

    def test_wdvv_builtin(self, capsys):
        doc = run_json(capsys, "wdvv", "--n", "3", "--builtin", "--points", "20")
        assert doc["value"]["max_residual"] <= 1e-10
        assert doc["value"]["points"] == 20

    def test_wdvv_quartic(self, capsys):
        doc = run_json(capsys, "wdvv", "--n", "3", "--potential", "t1^4 + t2^4 + t3^4 + t1^2*t2*t3",
                       "--at", "1,1,1")
        assert doc["value"]["max_residual"] > 1e-3

    def test_mldegree_stored(self, capsys, stored_model_path):
        doc = run_json(capsys, "mldegree", "--model", str(stored_model_path), "--trials", "3",
                       "--restarts", "500", "--seed", "0")
        assert doc["value"]["stable"]
        assert doc["value"]["counts"] == [doc["value"]["estimate"]] * 3

    @pytest.mark.parametrize("cmd", ["metric", "third-tensor", "curvature", "ma-invariant"])
    def test_geometry_commands(self, capsys, cmd, pd_file):
        doc = run_json(capsys, cmd, "--x", pd_file)
        assert len(doc["value"]) == 1
        doc = run_json(capsys, cmd, "--n", "3", "--points", "2")
        assert len(doc["value"]) == 2

    def test_curvature_sign(self, capsys):
        doc = run_json(capsys, "curvature", "--n", "3", "--points", "3")
        assert doc["diagnostics"]["max_sectional_curvature"] <= 1e-12

    def test_ma_invariant(self, capsys):
        doc = run_json(capsys, "ma-invariant", "--n", "3", "--points", "5")
        assert doc["diagnostics"]["max_relative_deviation"] <= 1e-8

    def test_chi(self, capsys, pd_file):
        doc = run_json(capsys, "chi", "--x", pd_file, "--samples", "20000", "--seed", "4")
        v = doc["value"]
        assert v["closed_form"] == pytest.approx(1.75 ** -1.5)
        assert v["ratio"] == pytest.approx(v["monte_carlo"] / v["closed_form"])

    def test_geodesic(self, capsys, tmp_path):
        x = tmp_path / "a.json"
        y = tmp_path / "b.json"
        x.write_text(json.dumps([[1, 0], [0, 4]]))
        y.write_text(json.dumps([[4, 0], [0, 1]]))
        doc = run_json(capsys, "geodesic", "--x", str(x), "--y", str(y), "--t", "0.5")
        assert doc["value"]["upper"] == pytest.approx([2.0, 0.0, 2.0])
        assert doc["diagnostics"]["max_offdiag"] <= 1e-10

    def test_prelie(self, capsys):
        doc = run_json(capsys, "prelie", "--v", "x1,0", "--w", "1,0")
        assert doc["value"] == {"v_o_w": ["0", "0"], "w_o_v": ["1", "0"]}

    def test_mle_and_polar(self, capsys, stored_model_path, tmp_path):
        diag = tmp_path / "diag.json"
        diag.write_text(json.dumps({"n": 2, "L0": None, "basis": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]}))
        s = tmp_path / "s.json"
        s.write_text(json.dumps([[2.0, 0.3], [0.3, 4.0]]))
        doc = run_json(capsys, "mle", "--model", str(diag), "--sample-cov", str(s))
        assert doc["value"]["x"] == pytest.approx([0.5, 0.25], abs=1e-10)
        doc = run_json(capsys, "polar", "--model", str(stored_model_path))
        assert doc["diagnostics"]["dim"] == 4

    def test_spectra(self, capsys, seg_spec, stored_model_path):
        doc = run_json(capsys, "spectra", "--spec", seg_spec, "--point", "1")
        assert doc["value"]["status"] == "boundary"
        assert doc["diagnostics"]["inequality_classification"] == "boundary"
        doc = run_json(capsys, "spectra", "--model", str(stored_model_path), "--point", "0,0")
        assert doc["value"]["status"] == "boundary"

    @pytest.mark.parametrize("action", ["vertices", "faces", "fan", "strata", "bb", "residuals", "report"])
    def test_permuto_actions(self, capsys, action):
        doc = run_json(capsys, "permuto", action, "--n", "2")
        assert doc["value"]

    def test_bb_weight(self, capsys):
        doc = run_json(capsys, "permuto", "bb", "--n", "2", "--weight=-5,1,4")
        assert doc["value"]["census"] == {"0": 1, "1": 4, "2": 1}


class TestFormats:
    def test_csv_fvector(self, capsys):
        code, out, _ = run(capsys, "permuto", "fvector", "--n", "2", "--format", "csv")
        assert code == 0
        assert out == "dim,count\n0,6\n1,6\n2,1\n"

    def test_csv_strata(self, capsys):
        code, out, _ = run(capsys, "permuto", "strata", "--n", "3", "--format", "csv")
        assert out.splitlines()[-1] == "1 3,6"

    def test_csv_mldegree(self, capsys, stored_model_path):
        code, out, _ = run(capsys, "mldegree", "--model", str(stored_model_path), "--restarts", "60",
                           "--format", "csv")
        assert code == 0
        assert out.splitlines()[0] == "trial,distinct,converged"
        assert len(out.splitlines()) == 4

    def test_csv_unavailable(self, capsys):
        code, out, _ = run(capsys, "wdvv", "--n", "2", "--format", "csv")
        assert code == 2 and out == ""

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "r.json"
        code, out, _ = run(capsys, "permuto", "fvector", "--n", "1", "--out", str(target))
        assert code == 0 and out == ""
        assert json.loads(target.read_text())["value"]["f"] == [2, 1]


class TestDeterminism:
    @pytest.mark.parametrize(
        "argv",
        [
            ("metric", "--n", "3", "--points", "2", "--seed", "9"),
            ("wdvv", "--n", "4", "--points", "5", "--seed", "1"),
            ("chi", "--n", "2", "--samples", "5000", "--seed", "2"),
            ("permuto", "bb", "--n", "3"),
        ],
    )
    def test_byte_identical(self, capsys, argv):
        _, a, _ = run(capsys, *argv, "--no-timings")
        _, b, _ = run(capsys, *argv, "--no-timings")
        assert a == b and a

    def test_seed_changes_output(self, capsys):
        _, a, _ = run(capsys, "metric", "--seed", "1", "--no-timings")
        _, b, _ = run(capsys, "metric", "--seed", "2", "--no-timings")
        assert a != b

    def test_env_seed(self, capsys, monkeypatch):
        monkeypatch.setenv("CONEGEO_SEED", "17")
        doc = run_json(capsys, "metric")
        assert doc["inputs"]["seed"] == 17
        doc = run_json(capsys, "metric", "--seed", "3")
        assert doc["inputs"]["seed"] == 3

    def test_config_file_below_flags(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("CONEGEO_SEED", "17")
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n": 3, "points": 2, "seed": 5}))
        doc = run_json(capsys, "ma-invariant", "--config", str(cfg))
        assert len(doc["value"]) == 2 and doc["inputs"]["seed"] == 5
        doc = run_json(capsys, "ma-invariant", "--config", str(cfg), "--points", "1")
        assert len(doc["value"]) == 1


class TestExitCodes:
    def test_unknown_subcommand(self, capsys):
        code, out, err = run(capsys, "frobnicate")
        assert code == 64 and out == ""
        assert "unknown subcommand" in err

    def test_no_arguments(self, capsys):
        assert run(capsys)[0] == 64

    def test_missing_file(self, capsys):
        code, out, _ = run(capsys, "polar", "--model", "/nonexistent/model.json")
        assert code == 65 and out == ""

    def test_malformed_json(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run(capsys, "polar", "--model", str(bad))[0] == 65
        bad.write_text(json.dumps({"n": 2}))
        assert run(capsys, "polar", "--model", str(bad))[0] == 65

    @pytest.mark.parametrize(
        "argv",
        [
            ("metric", "--n", "0"),
            ("metric", "--tol", "-1"),
            ("wdvv", "--n", "3", "--at", "1,2"),
            ("permuto", "bb", "--n", "2", "--weight", "1,1,-2"),
            ("permuto", "faces", "--n", "9"),
            ("metric", "--n", "two"),
            ("permuto", "nope"),
            ("prelie", "--v", "x1,", "--w", "1,0"),
        ],
    )
    def test_validation_errors(self, capsys, argv):
        code, out, _ = run(capsys, *argv)
        assert code == 2 and out == ""

    def test_not_pd_input(self, capsys, tmp_path):
        x = tmp_path / "x.json"
        x.write_text(json.dumps([[1, 0], [0, -1]]))
        code, out, _ = run(capsys, "metric", "--x", str(x))
        assert code == 2 and out == ""

    def test_empty_cone_is_validation_error(self, capsys, stored_model_path):
        # the stored model contains no PD matrix at all
        code, out, err = run(capsys, "mle", "--model", str(stored_model_path))
        assert code == 2 and out == "" and "positive-definite" in err

    def test_numerical_failure(self, capsys, tmp_path):
        # K = x * E11 is singular for every x, so no critical point survives
        m = tmp_path / "m.json"
        m.write_text(json.dumps({"n": 2, "L0": None, "basis": [[[1, 0], [0, 0]]]}))
        code, out, _ = run(capsys, "mldegree", "--model", str(m), "--restarts", "10")
        assert code == 3 and out == ""

    def test_singular_hessian(self, capsys):
        code, _, _ = run(capsys, "wdvv", "--n", "3", "--potential", "t1^3 + t2^3 + t3^3", "--at", "0,1,1")
        assert code == 3


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "conegeo", "permuto", "fvector", "--n", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["value"]["f"] == [6, 6, 1]
    proc = subprocess.run([sys.executable, "-m", "conegeo", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 64
