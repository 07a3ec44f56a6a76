import json
from pathlib import Path

import pytest

from extraqp.bench import write_csv
from extraqp.cli import main

FIXTURES = Path(__file__).parent / "fixtures"


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSolve:
    def test_fixture_json_record(self, capsys):
        code, out, _ = run_cli(capsys, "solve", str(FIXTURES / "toybound.qps"),
                               "--algo", "extrapolation", "--p", "2",
                               "--kappa", "2", "--json")
        assert code == 0
        record = json.loads(out)
        assert record["status"] == "optimal"
        assert record["objective"] == pytest.approx(-1.5, abs=1e-6)
        assert record["x"] == pytest.approx([1.0], abs=1e-6)
        assert record["nonzero_final_shifts"] is False

    def test_missing_file_is_json_error(self, capsys):
        code, _, err = run_cli(capsys, "solve", "no-such-file.qps")
        assert code == 1
        assert "error" in json.loads(err)

    def test_parse_error_reported(self, capsys, tmp_path):
        bad = tmp_path / "bad.qps"
        bad.write_text("NAME  X\nROWS\n Z  R1\nENDATA\n")
        code, _, err = run_cli(capsys, "solve", str(bad))
        assert code == 1
        assert "error" in json.loads(err)


class TestGenSolveAgreement:
    def test_three_algorithms_agree(self, capsys, tmp_path):
        out_file = tmp_path / "a.qps"
        code, _, _ = run_cli(capsys, "gen", "--n", "2", "--t", "9",
                             "--seed", "7", "--out", str(out_file))
        assert code == 0
        objectives = {}
        for algo in ("extrapolation", "newton-baseline", "mehrotra"):
            code, out, _ = run_cli(capsys, "solve", str(out_file),
                                   "--algo", algo, "--json")
            assert code == 0
            record = json.loads(out)
            assert record["status"] == "optimal"
            objectives[algo] = record["objective"]
        ref = objectives["extrapolation"]
        scale = max(1.0, abs(ref))
        for value in objectives.values():
            assert abs(value - ref) / scale < 1e-6

    def test_gen_rejects_bad_condition(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "gen", "--n", "2", "--t", "0.5",
                               "--seed", "1", "--out", str(tmp_path / "x.qps"))
        assert code == 1
        assert "error" in json.loads(err)


class TestBenchAndProfile:
    def test_random_grid_to_profile_svg(self, capsys, tmp_path):
        results = tmp_path / "results.csv"
        code, out, _ = run_cli(capsys, "bench", "--random",
                               "n=6;t=2;reps=2;seeds=0:2",
                               "--solvers", "extrapolation,newton-baseline",
                               "--out", str(results))
        assert code == 0
        assert "wrote" in out
        assert results.exists()

        svg = tmp_path / "profile.svg"
        code, out, _ = run_cli(capsys, "profile", str(results),
                               "--svg", str(svg))
        assert code == 0
        assert svg.exists()
        assert "extrapolation" in out

    def test_bench_directory_of_fixtures(self, capsys, tmp_path):
        results = tmp_path / "results.csv"
        code, out, _ = run_cli(capsys, "bench", "--dir", str(FIXTURES),
                               "--solvers", "extrapolation", "--reps", "1",
                               "--out", str(results))
        assert code == 0
        assert results.exists()

    def test_bench_warmstart_rule(self, capsys, tmp_path):
        results = tmp_path / "results.csv"
        code, _, _ = run_cli(capsys, "bench", "--random",
                             "n=6;t=2;reps=1;seeds=0:1",
                             "--solvers", "extrapolation",
                             "--warmstart", "mehrotra:meancompl<1",
                             "--out", str(results))
        assert code == 0

    def test_unknown_solver_rejected(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "bench", "--random", "n=6;t=2",
                               "--solvers", "simplex",
                               "--out", str(tmp_path / "r.csv"))
        assert code == 1
        assert "error" in json.loads(err)

    def test_profile_on_failing_solver(self, capsys, tmp_path):
        rows = [
            {"problem": "p1", "solver": "A", "rep": 0, "status": "optimal",
             "outer_iterations": 2, "inner_iterations": 3, "time_ms": 1.0,
             "res_inf_0": 1e-10, "objective": 0.5},
            {"problem": "p1", "solver": "B", "rep": 0, "status": "timeout",
             "outer_iterations": 9, "inner_iterations": 9,
             "time_ms": float("nan"), "res_inf_0": float("nan"),
             "objective": float("nan")},
        ]
        path = tmp_path / "r.csv"
        write_csv(rows, path)
        code, out, _ = run_cli(capsys, "profile", str(path))
        assert code == 0
        assert "A: starts at 1.000" in out
        assert "B: starts at 0.000" in out
