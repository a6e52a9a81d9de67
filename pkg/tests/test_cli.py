import json

import numpy as np
import pytest

from wsbmpl.cli import main
from wsbmpl.io import read_labels, read_matrix, write_edge_list, write_labels, write_matrix
from wsbmpl.model import Labeling


@pytest.fixture
def planted(tmp_path):
    out = tmp_path / "net"
    assert main(["generate", "--n", "90", "--k", "3", "--a", "2", "--sigma2", "0.5",
                 "--fixed-counts", "--seed", "3", "--out", str(out)]) == 0
    return out


class TestGenerate:
    def test_outputs(self, planted):
        W = read_matrix(planted / "matrix.csv")
        c = read_labels(planted / "labels.csv")
        cfg = json.loads((planted / "config.json").read_text())
        assert W.n == 90 and c.k == 3 and c.counts().tolist() == [30, 30, 30]
        assert cfg["seed"] == 3 and cfg["K"] == 3

    def test_same_seed_same_bytes(self, tmp_path, planted):
        main(["generate", "--n", "90", "--k", "3", "--a", "2", "--sigma2", "0.5",
              "--fixed-counts", "--seed", "3", "--out", str(tmp_path / "again")])
        for name in ("matrix.csv", "labels.csv", "config.json"):
            assert (planted / name).read_bytes() == (tmp_path / "again" / name).read_bytes()


class TestFit:
    def test_strong_signal(self, planted, tmp_path):
        out, lab = tmp_path / "fit.json", tmp_path / "fit_labels.csv"
        assert main(["fit", "--matrix", str(planted / "matrix.csv"), "--k", "3",
                     "--ref-labels", str(planted / "labels.csv"), "--out", str(out),
                     "--labels-out", str(lab)]) == 0
        res = json.loads(out.read_text())
        assert res["loss"] == 0.0 and res["init"] == "SC"
        assert len(res["pll_trace"]) == len(res["converged"])
        assert read_labels(lab).n == 90

    def test_db_reports_level(self, planted, tmp_path):
        out = tmp_path / "fit.json"
        main(["fit", "--matrix", str(planted / "matrix.csv"), "--k", "3", "--init", "db",
              "--out", str(out)])
        assert json.loads(out.read_text())["db_level"] == 2

    def test_oracle_without_truth_is_invalid(self, planted):
        assert main(["fit", "--matrix", str(planted / "matrix.csv"), "--k", "3",
                     "--init", "oracle:0.7"]) == 2

    def test_edge_list_matches_matrix_input(self, planted, tmp_path, capsys):
        write_edge_list(tmp_path / "e.tsv", read_matrix(planted / "matrix.csv"))
        assert main(["fit", "--edges", str(tmp_path / "e.tsv"), "--n", "90", "--k", "3"]) == 0
        via_edges = json.loads(capsys.readouterr().out)["labels"]
        main(["fit", "--matrix", str(planted / "matrix.csv"), "--k", "3"])
        assert json.loads(capsys.readouterr().out)["labels"] == via_edges


class TestExitCodes:
    def test_missing_file(self, tmp_path):
        assert main(["fit", "--matrix", str(tmp_path / "nope.csv"), "--k", "2"]) == 3

    def test_asymmetric_matrix(self, tmp_path):
        (tmp_path / "w.csv").write_text("0,1\n2,0\n")
        assert main(["fit", "--matrix", str(tmp_path / "w.csv"), "--k", "2"]) == 2

    def test_bad_gamma(self):
        assert main(["bounds", "balanced", "--k", "3", "--gamma", str(1 / 3)]) == 2

    def test_bad_config_key(self, tmp_path):
        (tmp_path / "c.json").write_text('{"n": 30, "colour": 1}')
        assert main(["simulate", "--config", str(tmp_path / "c.json")]) == 2

    def test_argparse_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["fit"])
        assert exc.value.code == 2


class TestSimulate:
    ARGS = ["simulate", "--n", "60", "--k", "2", "--a", "0.5,1.0", "--sigma2", "1",
            "--init", "spectral", "--init", "oracle:0.8", "--reps", "3", "--seed", "4", "--T", "5"]

    def test_outputs_and_worker_independence(self, tmp_path):
        for w in ("1", "3"):
            assert main(self.ARGS + ["--workers", w, "--out", str(tmp_path / w)]) == 0
        assert (tmp_path / "1" / "sweep.csv").read_bytes() == (tmp_path / "3" / "sweep.csv").read_bytes()
        lines = (tmp_path / "1" / "sweep.csv").read_text().splitlines()
        assert len(lines) == 1 + 2 * 4
        info = json.loads((tmp_path / "1" / "run_info.json").read_text())
        assert info["db_levels"] == {"60": 2}

    def test_config_echo_round_trips(self, tmp_path, capsys):
        main(self.ARGS + ["--workers", "1", "--out", str(tmp_path / "a")])
        assert main(["simulate", "--config", str(tmp_path / "a" / "config.json"), "--out",
                     str(tmp_path / "b")]) == 0
        assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()

    def test_stdout(self, capsys):
        assert main(self.ARGS + ["--workers", "1"]) == 0
        assert capsys.readouterr().out.startswith("n,K,a,b,sigma2")


class TestBounds:
    def test_balanced(self, capsys):
        main(["bounds", "balanced", "--k", "2", "--n", "800", "--a", "0.2", "--gamma", "1"])
        assert json.loads(capsys.readouterr().out)["expected_error_bound"] == pytest.approx(np.exp(-4))

    def test_unbalanced(self, capsys):
        main(["bounds", "unbalanced", "--pi", "0.7,0.3", "--gamma", "0.8", "--n", "100"])
        assert json.loads(capsys.readouterr().out)["t1"] == pytest.approx(0.10351, abs=1e-5)

    def test_heatmap(self, capsys):
        main(["bounds", "heatmap", "--ab-grid", "0.5,1", "--delta-grid", "0,0.1,0.2"])
        lines = capsys.readouterr().out.strip().splitlines()
        # one header row of |a-b| values, one row per delta
        assert lines[0] == "delta,0.5,1" and len(lines) == 4
        assert all(len(line.split(",")) == 3 for line in lines)

    def test_non_finite_serializes_as_null(self, capsys):
        assert main(["bounds", "balanced", "--k", "2", "--n", "1e6", "--a", "0.01", "--gamma", "0.6"]) == 0
        assert json.loads(capsys.readouterr().out)["prob_rhs"] is None


class TestAnalyzeEvalOverlapAverage:
    def test_analyze_bundle(self, planted, tmp_path):
        out = tmp_path / "an"
        assert main(["analyze", "--matrix", str(planted / "matrix.csv"), "--k-range", "2:3",
                     "--methods", "sc,pl-sc", "--ref-labels", str(planted / "labels.csv"),
                     "--out", str(out)]) == 0
        assert (out / "likelihood.csv").read_text().count("\n") == 1 + 4
        assert "1.000000" in (out / "overlap_pl-sc.csv").read_text()
        assert (out / "labels_K3_sc.csv").exists()
        assert json.loads((out / "config.json").read_text())["k_range"] == [2, 3]

    def test_eval(self, tmp_path, capsys):
        write_labels(tmp_path / "a.csv", Labeling(np.array([2, 2, 1, 1]), 2))
        write_labels(tmp_path / "b.csv", Labeling(np.array([1, 1, 2, 1]), 2))
        main(["eval", "--labels", str(tmp_path / "a.csv"), "--ref-labels", str(tmp_path / "b.csv")])
        res = json.loads(capsys.readouterr().out)
        assert res["loss"] == 0.25 and res["permutation"] == [2, 1]

    def test_overlap(self, tmp_path, capsys):
        write_labels(tmp_path / "a.csv", Labeling(np.array([1, 1, 2, 2]), 2))
        main(["overlap", "--labels", str(tmp_path / "a.csv"), "--ref-labels", str(tmp_path / "a.csv")])
        assert capsys.readouterr().out.splitlines()[1:] == ["1,1,1.000000", "2,2,1.000000"]

    def test_average(self, tmp_path):
        A = np.array([[0.0, 1.0], [1.0, 0.0]])
        write_matrix(tmp_path / "a.csv", A)
        write_matrix(tmp_path / "b.csv", 3 * A)
        assert main(["average", "--matrix", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"),
                     "--out", str(tmp_path / "m.csv")]) == 0
        assert np.array_equal(read_matrix(tmp_path / "m.csv").weights, 2 * A)

    def test_average_shape_mismatch(self, tmp_path):
        write_matrix(tmp_path / "a.csv", np.zeros((2, 2)))
        write_matrix(tmp_path / "b.csv", np.zeros((3, 3)))
        assert main(["average", "--matrix", str(tmp_path / "a.csv"), str(tmp_path / "b.csv")]) == 2
