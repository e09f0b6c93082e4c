import csv
import io
import json

import numpy as np
import pytest

from mwcg import cli
from mwcg.sparse import read_matrix_market


def run(argv, capsys=None):
    code = cli.main(argv)
    return code


def read_csv(path):
    with open(path, newline="", encoding="ascii") as f:
        return list(csv.reader(f))


class TestExitCodes:
    def test_success_is_zero(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run(["solve", "--synthetic", "identity:4",
                    "--out-summary", str(out)]) == cli.EXIT_OK

    def test_usage_error_is_one(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["solve", "--synthetic", "identity:4", "--mode", "fp128"])
        assert exc.value.code == cli.EXIT_USAGE

    def test_missing_input_flag_is_one(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["solve"])
        assert exc.value.code == cli.EXIT_USAGE

    def test_nonpositive_eps_is_one(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["solve", "--synthetic", "identity:4", "--eps", "0.0"])
        assert exc.value.code == cli.EXIT_USAGE

    def test_bad_reps_is_one(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["solve", "--synthetic", "identity:4", "--reps", "0"])
        assert exc.value.code == cli.EXIT_USAGE

    def test_malformed_matrix_file_is_two(self, tmp_path, capsys):
        bad = tmp_path / "bad.mtx"
        bad.write_text("this is not a matrix\n1 1 1\n1 1 1.0\n")
        assert run(["solve", "--matrix", str(bad)]) == cli.EXIT_INPUT
        err = capsys.readouterr().err
        assert "line 1" in err

    def test_missing_file_is_two(self, tmp_path):
        assert run(["solve", "--matrix",
                    str(tmp_path / "nope.mtx")]) == cli.EXIT_INPUT

    def test_unknown_synthetic_is_two(self):
        assert run(["solve", "--synthetic", "hilbert:5"]) == cli.EXIT_INPUT

    def test_malformed_synthetic_is_two(self):
        assert run(["solve", "--synthetic", "identity:x"]) == cli.EXIT_INPUT


class TestSolve:
    def test_identity_single_row(self, tmp_path):
        out = tmp_path / "s.csv"
        run(["solve", "--synthetic", "identity:5", "--out-summary", str(out)])
        rows = read_csv(out)
        assert rows[0][:3] == ["matrix", "mode", "eps"]
        assert len(rows) == 2
        rec = dict(zip(rows[0], rows[1]))
        assert rec["mode"] == "fp64" and rec["converged"] == "1"
        assert int(rec["iterations"]) <= 1
        assert float(rec["final_error_norm"]) == 0.0

    def test_five_modes_and_best_marker(self, tmp_path):
        out = tmp_path / "s.csv"
        argv = ["solve", "--synthetic", "laplacian2d:4", "--eps", "1e-10",
                "--no-timing", "--out-summary", str(out)]
        for m in ("fp64", "dw", "qdw", "tw", "qtw"):
            argv += ["--mode", m]
        run(argv)
        rows = read_csv(out)
        assert len(rows) == 6
        assert "seconds" not in rows[0]
        best = [r for r in rows[1:] if r[rows[0].index("best")] == "1"]
        assert len(best) == 1

    def test_history_rows(self, tmp_path):
        s, h = tmp_path / "s.csv", tmp_path / "h.csv"
        run(["solve", "--synthetic", "laplacian2d:4", "--mode", "dw",
             "--eps", "1e-20", "--stride", "5",
             "--out-summary", str(s), "--out-history", str(h)])
        srows = read_csv(s)
        iters = int(dict(zip(srows[0], srows[1]))["iterations"])
        hrows = read_csv(h)
        assert hrows[0] == ["matrix", "mode", "eps", "iteration",
                            "recurrence_residual", "true_residual",
                            "error_norm"]
        ks = [int(r[3]) for r in hrows[1:]]
        assert ks[0] == 0 and ks[-1] == iters
        assert len(ks) == len([k for k in range(5, iters, 5)]) + 2

    def test_json_dump(self, tmp_path):
        j = tmp_path / "out.json"
        run(["solve", "--synthetic", "laplacian2d:3", "--mode", "tw",
             "--eps", "1e-30", "--json", str(j), "--out-summary",
             str(tmp_path / "s.csv")])
        payload = json.loads(j.read_text())
        assert payload["n"] == 9 and payload["matrix"] == "laplacian2d:3"
        (entry,) = payload["runs"]
        assert entry["mode"] == "tw" and entry["converged"] is True
        assert entry["history"][0][0] == 0
        assert "seconds" in entry

    def test_no_timing_runs_are_byte_identical(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            s = tmp_path / f"s-{name}.csv"
            h = tmp_path / f"h-{name}.csv"
            run(["solve", "--synthetic", "laplacian2d:4", "--mode", "qtw",
                 "--eps", "1e-28", "--no-timing", "--stride", "7",
                 "--out-summary", str(s), "--out-history", str(h)])
            outs.append(s.read_bytes() + h.read_bytes())
        assert outs[0] == outs[1]

    def test_summary_to_stdout(self, capsys):
        run(["solve", "--synthetic", "identity:3", "--no-timing"])
        out = capsys.readouterr().out
        assert out.splitlines()[0].startswith("matrix,mode,eps")

    def test_threads_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MW_THREADS", "3")
        out = tmp_path / "s.csv"
        assert run(["solve", "--synthetic", "identity:4",
                    "--out-summary", str(out)]) == cli.EXIT_OK
        monkeypatch.setenv("MW_THREADS", "zebra")
        assert run(["solve", "--synthetic", "identity:4",
                    "--out-summary", str(out)]) == cli.EXIT_INPUT


class TestBench:
    def test_spmv_csv_shape(self, tmp_path):
        out = tmp_path / "b.csv"
        run(["bench", "--synthetic", "laplacian2d:4", "--kernel", "spmv",
             "--mode", "fp64", "--mode", "dw", "--reps", "2",
             "--out-summary", str(out)])
        rows = read_csv(out)
        assert rows[0] == ["matrix", "kernel", "mode", "n", "nnz",
                           "seconds_best", "bytes_model", "gbps"]
        assert len(rows) == 3
        assert rows[1][2] == "fp64" and rows[2][2] == "dw"
        n, nnz = 16, 16 * 5 - 16  # interior minus boundary edges
        assert int(rows[1][3]) == 16

    def test_dot_bytes_model(self, tmp_path):
        out = tmp_path / "b.csv"
        run(["bench", "--synthetic", "identity:100", "--kernel", "dot",
             "--mode", "tw", "--reps", "1", "--out-summary", str(out)])
        rows = read_csv(out)
        assert int(rows[1][6]) == 2 * 100 * 3 * 8

    def test_default_mode(self, capsys):
        assert run(["bench", "--synthetic", "identity:10", "--kernel", "dot",
                    "--reps", "1"]) == cli.EXIT_OK
        out = capsys.readouterr().out
        assert ",fp64," in out


class TestGenerate:
    def test_output_parses_back(self, tmp_path, capsys):
        om, orhs = tmp_path / "m.mtx", tmp_path / "b.mtx"
        code = run(["generate", "--synthetic", "random:30:7",
                    "--out-matrix", str(om), "--out-rhs", str(orhs)])
        assert code == cli.EXIT_OK
        m, symmetric = read_matrix_market(str(om))
        assert not symmetric and m.n_rows == 30
        lines = orhs.read_text().splitlines()
        assert lines[0].startswith("%%MatrixMarket matrix array")
        assert lines[1] == "30 1"
        b = np.array([float(v) for v in lines[2:]])
        assert b.size == 30
        # regenerating from the written matrix reproduces b exactly
        code = run(["solve", "--matrix", str(om), "--no-timing",
                    "--eps", "1e-10"])
        assert code == cli.EXIT_OK
        assert "perturbation norm" in capsys.readouterr().out


class TestVerify:
    def test_verify_passes(self, capsys):
        assert run(["verify"]) == cli.EXIT_OK
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert "checks passed" in out


class TestVersion:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["--version"])
        assert exc.value.code == 0
        assert capsys.readouterr().out.startswith("mwcg ")
