"""End-to-end command line tests through main()."""

import csv
import json

import pytest

from osc3.cli import main


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    assert code == 0, out
    return json.loads(out)


class TestCheck:
    def test_lazer_fixture_all_apply(self, capsys):
        doc = run_json(capsys, ["check", "--fixture", "lazer"])
        reports = {rep["theorem"]: rep for rep in doc["theorem_reports"]}
        assert set(reports) == {"LAZER", "THM31", "THM32", "THM33"}
        for name, rep in reports.items():
            assert rep["overall"] == "APPLIES", name
        assert doc["config"]["fixture"] == "lazer"
        assert doc["version"]

    def test_theorem_filter(self, capsys):
        doc = run_json(capsys, ["check", "--fixture", "lazer", "--theorem", "thm32"])
        assert [rep["theorem"] for rep in doc["theorem_reports"]] == ["THM32"]

    def test_raw_sources_with_override(self, capsys):
        argv = [
            "check", "--p", "-t^2", "--q", "0", "--r", "t^2",
            "--d-override", "t^2", "--theorem", "thm32",
        ]
        doc = run_json(capsys, argv)
        assert doc["theorem_reports"][0]["overall"] == "APPLIES"

    def test_raw_sources_without_override(self, capsys):
        # without the engineered minimum function the honest D is far more
        # negative and the criteria stay inconclusive
        argv = ["check", "--p", "-t^2", "--q", "0", "--r", "t^2", "--theorem", "thm32"]
        doc = run_json(capsys, argv)
        assert doc["theorem_reports"][0]["overall"] == "DOES_NOT_APPLY"

    def test_json_written_to_file(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = main(["check", "--fixture", "lazer", "--theorem", "lazer", "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["theorem_reports"][0]["overall"] == "APPLIES"

    def test_trajectory_csv(self, tmp_path, capsys):
        out = tmp_path / "traj.csv"
        code = main(
            ["check", "--fixture", "lazer", "--theorem", "thm32", "--csv", str(out)]
        )
        assert code == 0
        raw = out.read_bytes()
        assert b"\r\n" in raw
        rows = list(csv.DictReader(raw.decode().splitlines()))
        assert set(rows[0]) == {"t", "S", "criterion_id", "alpha"}
        ids = {row["criterion_id"] for row in rows}
        assert ids == {"THM32C", "THM32D"}
        floats = [float(row["S"]) for row in rows]
        assert all(isinstance(v, float) for v in floats)

    def test_byte_determinism(self, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        argv = ["check", "--fixture", "lazer", "--out"]
        assert main(argv + [str(a)]) == 0
        assert main(argv + [str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_param_override(self, capsys):
        doc = run_json(
            capsys,
            ["check", "--fixture", "example31", "--param", "beta=2.5", "--theorem", "thm32"],
        )
        assert doc["config"]["params"]["beta"] == 2.5


class TestVerify:
    def test_lazer_solutions(self, capsys):
        doc = run_json(
            capsys,
            ["verify", "--fixture", "lazer", "--tmax", "60", "--combos", "2", "--seed", "3"],
        )
        assert doc["has_oscillatory_evidence"] is True
        assert len(doc["solutions"]) == 5
        for sol in doc["solutions"]:
            assert sol["status"] == "completed"
            assert sol["t_end"] == 60.0
        assert any(s["zero_count"] >= 10 for s in doc["solutions"])

    def test_raw_equation(self, capsys):
        doc = run_json(
            capsys,
            ["verify", "--p", "0", "--q", "0", "--r", "0", "--tmax", "10", "--combos", "0"],
        )
        assert doc["has_oscillatory_evidence"] is False
        kinds = {s["classification"] for s in doc["solutions"]}
        assert "OSCILLATORY_EVIDENCE" not in kinds


class TestSweep:
    def test_flip_along_beta(self, tmp_path):
        out = tmp_path / "sweep.csv"
        argv = [
            "sweep", "--fixture", "example31", "--theorem", "thm31",
            "--sweep", "beta=2:4:1", "--grid-count", "60", "--out", str(out),
        ]
        assert main(argv) == 0
        rows = list(csv.DictReader(out.read_text().splitlines()))
        assert [row["beta"] for row in rows] == ["2.0", "3.0", "4.0"]
        by_beta = {row["beta"]: row["thm31_overall"] for row in rows}
        # the weighted penalty overtakes the r term once beta reaches
        # 2*gamma - 1, so the verdict flips from inconclusive to applies
        assert by_beta["2.0"] == "DOES_NOT_APPLY"
        assert by_beta["4.0"] == "APPLIES"
        assert all("zero_count" in row for row in rows)

    def test_parallel_matches_serial(self, tmp_path):
        a = tmp_path / "serial.csv"
        b = tmp_path / "parallel.csv"
        argv = [
            "sweep", "--p", "0", "--q", "0", "--r", "r0", "--param", "r0=1",
            "--theorem", "lazer", "--sweep", "r0=1:2:0.5", "--grid-count", "40",
        ]
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--jobs", "2", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_bad_sweep_spec(self, capsys):
        code = main(["sweep", "--fixture", "lazer", "--sweep", "nope"])
        assert code == 2
        assert "error" in capsys.readouterr().err


class TestRiccatiCommand:
    def test_identity(self, capsys):
        doc = run_json(capsys, ["riccati", "--comparison", "identity"])
        assert doc["report"]["ordering_ok"] is True
        assert doc["report"]["hypothesis_ok"] is True

    def test_linear(self, capsys):
        doc = run_json(capsys, ["riccati", "--comparison", "linear"])
        assert doc["report"]["ordering_ok"] is True
        assert doc["report"]["first_violation"] is None

    def test_variant_flag(self, capsys):
        doc = run_json(capsys, ["riccati", "--comparison", "identity", "--variant", "linearized"])
        assert doc["report"]["variant"] == "LINEARIZED"
        assert doc["config"]["variant"] == "linearized"


class TestErrorPaths:
    @pytest.mark.parametrize(
        "argv",
        [
            ["check", "--p", "(", "--q", "0", "--r", "1"],
            ["check", "--fixture", "lazer", "--param", "bogus=1"],
            ["check", "--fixture", "lazer", "--param", "noequals"],
            ["check", "--fixture", "lazer", "--theorem", "thm99"],
            ["check", "--p", "exp(t)", "--q", "0", "--r", "1"],
            ["check", "--fixture", "lazer", "--grid-count", "4"],
            ["verify", "--p", "M*t", "--q", "0", "--r", "1"],
        ],
    )
    def test_config_errors_return_2(self, argv, capsys):
        assert main(argv) == 2
        err = capsys.readouterr().err
        assert err.startswith("error:")

    def test_missing_sources(self, capsys):
        # no fixture and no p/q/r
        assert main(["check"]) == 2

    def test_version_flag(self, capsys):
        # argparse raises SystemExit(0); main converts it to a return code
        code = main(["--version"])
        assert code == 0
        assert "osc3" in capsys.readouterr().out
