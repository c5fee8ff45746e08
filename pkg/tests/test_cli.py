import json
import math
import subprocess
import sys

import pytest

from pdti.cli import EXIT_FAIL, EXIT_PASS, EXIT_USAGE, main
from pdti.tensor import DenseTensor, Shape, to_json


def run(tmp_path, *argv, name="out.json"):
    path = tmp_path / name
    code = main([*argv, "--out", str(path)])
    return code, path.read_text() if path.exists() else None


class TestExitCodes:
    def test_verify_subset(self, tmp_path):
        code, text = run(tmp_path, "verify", "--only", "algebra", "determinism", "--trials", "40")
        assert code == EXIT_PASS
        doc = json.loads(text)
        assert doc["passed"] and doc["schema_version"] == 1
        assert [c["name"] for c in doc["checks"]] == ["algebra", "determinism"]

    def test_vacuous_bound(self, tmp_path):
        code, text = run(tmp_path, "bound", "--g", "heinz", "--m", "1", "--omega", "0")
        assert code == EXIT_PASS
        doc = json.loads(text)
        assert doc["bound"]["vacuous"] is True
        assert doc["bound"]["integrable"] is False

    def test_finite_bound(self, tmp_path):
        code, text = run(tmp_path, "bound", "--g", "gaussian")
        assert code == EXIT_PASS
        rec = json.loads(text)["bound"]
        assert rec["l2_g"] == pytest.approx(math.pi**0.25, abs=1e-8)
        assert rec["bound"] > 0

    @pytest.mark.parametrize(
        "argv",
        [
            ["tailbound", "--theorem", "thm6", "--r0", "0.7"],
            ["tailbound", "--theorem", "thm5", "--omega", "3"],
            ["tailbound", "--theorem", "thm5", "--trials", "0"],
            ["tailbound", "--theorem", "thm5", "--theta-grid", "1:2"],
            ["tailbound", "--theorem", "thm9"],
            ["tailbound", "--theorem", "thm5", "--spectrum", "0,1"],
            ["bound", "--g", "bks", "--omega", "2"],
            ["derivcheck", "--omega", "1.5"],
            ["verify", "--shape", "2,x"],
            ["frobnicate"],
        ],
    )
    def test_usage_errors(self, tmp_path, argv):
        code, _ = run(tmp_path, *argv)
        assert code == EXIT_USAGE

    def test_contract_failure(self, tmp_path):
        # a single decade of t cannot shrink the gap by the required factor 100
        code, text = run(tmp_path, "converge", "--t-grid", "0.1,0.01", "--trials", "10")
        assert code == EXIT_FAIL
        assert json.loads(text)["passed"] is False

    def test_derivcheck(self, tmp_path):
        code, text = run(tmp_path, "derivcheck", "--omega", "0.5")
        assert code == EXIT_PASS
        doc = json.loads(text)
        assert doc["residuals"][1] <= 1e-4
        assert doc["first_order"]


class TestDeterminism:
    ARGV = ["tailbound", "--theorem", "thm7", "--omega", "0.5", "--trials", "2000", "--seed", "7"]

    def test_byte_identical(self, tmp_path):
        c1, a = run(tmp_path, *self.ARGV, name="a.json")
        c2, b = run(tmp_path, *self.ARGV, name="b.json")
        c3, c = run(tmp_path, *self.ARGV, "--workers", "3", name="c.json")
        assert c1 == c2 == c3 == EXIT_PASS
        assert a == b == c

    def test_report_is_rerunnable(self, tmp_path):
        _, text = run(tmp_path, "tailbound", "--theorem", "thm8", "--trials", "50", "--seed", "3")
        cfg = json.loads(text)["config"]
        assert cfg["seed"] == 3 and cfg["trials"] == 50
        assert cfg["params"] == {"alpha": 0.5, "beta": 0.5, "m": 1, "n": 1}
        assert "output_path" not in cfg


class TestFormats:
    def test_csv(self, tmp_path):
        code, text = run(
            tmp_path, "tailbound", "--theorem", "thm5", "--trials", "50", "--theta-grid", "0.1:1:4", "--format", "csv", name="t.csv"
        )
        assert code == EXIT_PASS
        lines = text.strip().split("\n")
        assert lines[0].split(",")[:3] == ["theorem", "theta", "fraction"]
        assert len(lines) == 5

    def test_x_file(self, tmp_path):
        xf = tmp_path / "x.json"
        xf.write_text(to_json(DenseTensor.identity(Shape((2, 2)))))
        argv = ["tailbound", "--theorem", "thm5", "--trials", "30"]
        _, with_x = run(tmp_path, *argv, "--x-file", str(xf), name="x1.json")
        _, without = run(tmp_path, *argv, name="x2.json")
        assert json.loads(with_x)["lhs_estimate"] != json.loads(without)["lhs_estimate"]

    def test_missing_x_file(self, tmp_path):
        code, _ = run(tmp_path, "tailbound", "--theorem", "thm5", "--x-file", str(tmp_path / "nope.json"))
        assert code == EXIT_USAGE

    def test_x_file_wrong_shape(self, tmp_path):
        xf = tmp_path / "x.json"
        xf.write_text(to_json(DenseTensor.identity(Shape((3,)))))
        code, _ = run(tmp_path, "tailbound", "--theorem", "thm5", "--trials", "5", "--x-file", str(xf))
        assert code == EXIT_USAGE


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pdti", "bound", "--g", "bks", "--omega", "0.5"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "bound"


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == 0
    assert "tailbound" in capsys.readouterr().out
