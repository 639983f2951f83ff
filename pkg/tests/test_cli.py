import csv
import json

import numpy as np
import pytest

from gencaputo.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main, resolve_config
from gencaputo.exceptions import ConfigError


def run(tmp_path, command, toml, name=None):
    cfg = tmp_path / "config.toml"
    cfg.write_text(toml)
    out = tmp_path / "out"
    status = main([command, str(cfg), "--output-dir", str(out)])
    return status, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestWeights:
    def test_first_level(self, tmp_path):
        status, out = run(tmp_path, "weights", "alpha = 0.5\nT = 1.0\nN = 1\n")
        assert status == EXIT_OK
        rows = read_csv(out / "weights.csv")
        assert [(r["n"], r["l"], float(r["lambda"])) for r in rows] == [
            ("1", "0", 1.1283791670955126),
            ("1", "1", -1.1283791670955126),
        ]
        manifest = json.loads((out / "weights.manifest.json").read_text())
        assert manifest["results"]["provenance"] == {"1": "n=1"}
        assert manifest["results"]["violations"] == []

    def test_violations_reported(self, tmp_path):
        toml = 'alpha = 0.5\nN = 4\nlevels = [2]\nweight = { kind = "affine", p = -1.0, q = 2.0 }\n'
        status, out = run(tmp_path, "weights", toml)
        assert status == EXIT_OK
        kinds = {v["hypothesis"] for v in json.loads((out / "weights.manifest.json").read_text())["results"]["violations"]}
        assert kinds == {"weight_decreasing"}

    def test_manifest_round_trip(self, tmp_path):
        toml = 'name = "w"\nalpha = 0.368\nN = 12\nscale = "exp(t)"\nweight = { kind = "power", sigma = 0.5 }\n'
        status, out = run(tmp_path, "weights", toml)
        assert status == EXIT_OK
        first = (out / "w.csv").read_bytes()
        again = tmp_path / "again"
        assert main(["weights", str(out / "w.manifest.json"), "--output-dir", str(again)]) == EXIT_OK
        assert (again / "w.csv").read_bytes() == first


class TestConfigErrors:
    @pytest.mark.parametrize(
        "command, toml",
        [
            ("weights", "alpha = 0.5\nN = 4\ntypo = 1\n"),
            ("weights", "N = 4\n"),
            ("weights", "alpha = 1.5\nN = 4\n"),
            ("weights", 'alpha = 0.5\nN = 4\nscale = "log(t)"\n'),
            ("weights", "alpha = 0.5\nN = 4.5\n"),
            ("weights", "alpha = 0.5\nN = [\n"),
            ("convergence", 'alpha = 0.5\nproblem = "ex52"\nresolutions = []\nfixed = 100\n'),
            ("convergence", 'alpha = 0.5\nproblem = "ex52"\nresolutions = [8, 12]\nfixed = 100\n'),
            ("convergence", 'alpha = 0.5\nproblem = "ex52"\nresolutions = [8, 16]\n'),
            ("convergence", 'alpha = 0.5\nproblem = "ex52"\nresolutions = [8, 16]\nfixed = 8\nscale = "t^4"\n'),
            ("solve", 'alpha = 0.5\nproblem = "ex99"\nN = 4\nM = 4\n'),
        ],
    )
    def test_exit_two_and_no_files(self, tmp_path, command, toml):
        status, out = run(tmp_path, command, toml)
        assert status == EXIT_CONFIG
        assert not out.exists()

    def test_parse_error_names_line(self, tmp_path, capsys):
        run(tmp_path, "weights", "alpha = 0.5\nN = [\n")
        assert "line" in capsys.readouterr().err

    def test_manifest_from_other_command(self, tmp_path):
        status, out = run(tmp_path, "stability", "lambda0 = 2\nlambda1 = 8\nD = 1\nA = 0\nh = 1\nM = 3\n")
        assert status == EXIT_OK
        assert main(["weights", str(out / "stability.manifest.json"), "--output-dir", str(tmp_path)]) == EXIT_CONFIG

    def test_missing_file(self, tmp_path):
        assert main(["weights", str(tmp_path / "absent.toml")]) == EXIT_CONFIG

    def test_resolve_config_defaults(self):
        cfg = resolve_config("weights", {"alpha": 0.5, "N": 3})
        assert cfg["scale"] == {"kind": "identity"} and cfg["weight"] == {"kind": "constant", "value": 1.0}
        with pytest.raises(ConfigError):
            resolve_config("weights", {"alpha": 0.5, "N": True})


def test_numerical_failure_exit(tmp_path):
    # A repeated scale value makes a subinterval degenerate.
    toml = 'alpha = 0.5\nN = 2\nT = 1.0\nscale = { kind = "tabulated", values = [0.0, 1.0, 1.0], T = 1.0 }\n'
    status, out = run(tmp_path, "weights", toml)
    assert status == EXIT_NUMERICAL


def test_stability(tmp_path, capsys):
    status, out = run(tmp_path, "stability", "lambda0 = 2\nlambda1 = 8\nD = 1\nA = 0\nh = 1\nM = 3\n")
    assert status == EXIT_OK
    assert "holds=true lhs=8 rhs=9" in capsys.readouterr().out
    assert read_csv(out / "stability.csv") == [{"holds": "true", "lhs": "8", "rhs": "9", "log_rhs": "2.1972245773362196"}]


def test_derivative(tmp_path):
    status, out = run(tmp_path, "derivative", "alpha = 0.5\nN = 160\n")
    assert status == EXIT_OK
    rows = read_csv(out / "derivative.csv")
    assert len(rows) == 160
    assert float(rows[-1]["exact"]) == pytest.approx(2.1809490743563963, rel=1e-14)
    assert max(float(r["abs_error"]) for r in rows) == pytest.approx(1.0560e-07, rel=0.02)


def test_derivative_without_oracle(tmp_path):
    status, out = run(tmp_path, "derivative", 'alpha = 0.5\nN = 8\nscale = "t^4"\n')
    assert status == EXIT_OK
    assert all(r["exact"] == "" and r["abs_error"] == "" for r in read_csv(out / "derivative.csv"))


def test_solve_zero_data(tmp_path):
    status, out = run(tmp_path, "solve", 'alpha = 0.5\nproblem = "ex52"\nN = 6\nM = 8\nzero_data = true\n')
    assert status == EXIT_OK
    rows = read_csv(out / "solve.csv")
    assert len(rows) == 9 * 7
    assert all(float(r["U"]) == 0.0 for r in rows)


def test_solve_reports_errors_and_stability(tmp_path):
    status, out = run(tmp_path, "solve", 'alpha = 0.5\nproblem = "ex54"\nN = 8\nM = 20\n')
    assert status == EXIT_OK
    results = json.loads((out / "solve.manifest.json").read_text())["results"]
    assert results["E_inf"] < 1e-2 and "holds_every_level" in results["stability"]


def test_convergence_derivative_study(tmp_path):
    toml = 'alpha = 0.8\nproblem = "ex51"\nweight = "exp(t)"\nresolutions = [10, 20, 40, 80, 160]\n'
    status, out = run(tmp_path, "convergence", toml)
    assert status == EXIT_OK
    rates = [float(r["rate"]) for r in read_csv(out / "convergence.csv")[1:]]
    np.testing.assert_allclose(rates, [2.9328, 3.0647, 3.1312, 3.1653], atol=0.02)


def test_convergence_pde_round_trip(tmp_path):
    toml = 'name = "c"\nalpha = 0.5\nproblem = "ex52"\naxis = "space"\nresolutions = [8, 16]\nfixed = 20\n'
    status, out = run(tmp_path, "convergence", toml)
    assert status == EXIT_OK

    def strip(p):
        return [line.rsplit(",", 1)[0] for line in p.read_text().splitlines()]

    again = tmp_path / "again"
    assert main(["convergence", str(out / "c.manifest.json"), "--output-dir", str(again)]) == EXIT_OK
    assert strip(again / "c.csv") == strip(out / "c.csv")
