import csv
import os

import pytest

from dnsgd.cli import METRIC_COLUMNS, build_parser, main
from dnsgd.optimizer import OptimizerKind


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _loss_columns(path):
    return [{k: v for k, v in row.items() if k != "elapsed_s"} for row in _read(path)]


@pytest.fixture
def compare_args(fixture_csv):
    return ["compare", "--data", fixture_csv, "--target", "price", "--categorical", "zone,label",
            "--epochs", "1", "--batch", "4", "--test-size", "4"]


class TestCompare:
    def test_structure(self, tmp_path, compare_args, capsys):
        assert main(compare_args + ["--out", str(tmp_path)]) == 0
        for kind in ("sgd", "dn-sgd", "sgd-dn"):
            path = tmp_path / f"metrics_{kind}.csv"
            rows = _read(path)
            # 16 training rows, batch 4 -> 4 iterations
            assert len(rows) == 4
            assert tuple(rows[0].keys()) == METRIC_COLUMNS
            assert rows[-1]["train_full_loss"] != "" and rows[0]["train_full_loss"] == ""
            assert path.read_bytes().endswith(b"\n") and b"\r" not in path.read_bytes()
        svg = (tmp_path / "comparison.svg").read_text()
        assert svg.startswith("<svg") and svg.count("<polyline") >= 6
        assert "wrote" in capsys.readouterr().out

    def test_solver_columns(self, tmp_path, compare_args):
        main(compare_args + ["--out", str(tmp_path)])
        sgd = _read(tmp_path / "metrics_sgd.csv")
        dn = _read(tmp_path / "metrics_dn-sgd.csv")
        assert all(r["h_max"] == "" and r["solver_status"] == "" for r in sgd)
        assert all(r["solver_status"] == "ok" and float(r["h_max"]) > 0 for r in dn)

    def test_deterministic(self, tmp_path, compare_args):
        main(compare_args + ["--out", str(tmp_path / "a")])
        main(compare_args + ["--out", str(tmp_path / "b")])
        for kind in ("sgd", "dn-sgd", "sgd-dn"):
            name = f"metrics_{kind}.csv"
            assert _loss_columns(tmp_path / "a" / name) == _loss_columns(tmp_path / "b" / name)

    def test_synthetic_regression(self, tmp_path):
        code = main(["compare", "--synthetic", "regression", "--batch", "50", "--epochs", "5",
                     "--out", str(tmp_path)])
        assert code == 0
        final = {k: float(_read(tmp_path / f"metrics_{k}.csv")[-1]["train_full_loss"])
                 for k in ("sgd", "dn-sgd")}
        assert final["dn-sgd"] < final["sgd"]

    def test_classification_accuracy_column(self, tmp_path, fixture_csv):
        code = main(["compare", "--data", fixture_csv, "--target", "label", "--task", "classification",
                     "--categorical", "zone", "--epochs", "2", "--batch", "5", "--alpha", "0.01",
                     "--out", str(tmp_path)])
        assert code == 0
        rows = _read(tmp_path / "metrics_dn-sgd.csv")
        assert 0.0 <= float(rows[-1]["accuracy"]) <= 1.0

    def test_input_not_modified(self, tmp_path, compare_args, fixture_csv):
        before = open(fixture_csv, "rb").read()
        main(compare_args + ["--out", str(tmp_path)])
        assert open(fixture_csv, "rb").read() == before

    def test_log_scale(self, tmp_path, compare_args):
        assert main(compare_args + ["--out", str(tmp_path), "--log-scale"]) == 0
        assert "loss (log)" in (tmp_path / "comparison.svg").read_text()


class TestTrain:
    def test_alias_and_outputs(self, tmp_path, fixture_csv):
        code = main(["train", "--data", fixture_csv, "--target", "price", "--categorical", "zone,label",
                     "--optimizer", "qn-sgd", "--layers", "9,3,1", "--epochs", "2", "--batch", "8",
                     "--out", str(tmp_path)])
        assert code == 0
        assert os.listdir(tmp_path) and (tmp_path / "metrics_dn-sgd.csv").exists()
        assert (tmp_path / "loss_dn-sgd.svg").exists()
        assert _read(tmp_path / "metrics_dn-sgd.csv")[0]["optimizer"] == "dn-sgd"

    def test_defaults(self):
        args = build_parser().parse_args(["train", "--synthetic", "regression"])
        assert (args.batch, args.alpha, args.lr, args.epochs) == (200, 0.0, 0.01, 20)
        assert args.optimizer is OptimizerKind.DN_SGD

    @pytest.mark.parametrize("extra", [
        ["--layers", "3,2,1"],          # input width does not match the data
        ["--epochs", "0"],
        ["--lr", "-1"],
        ["--batch", "500"],
    ])
    def test_config_errors_exit_1(self, tmp_path, fixture_csv, extra, capsys):
        code = main(["train", "--data", fixture_csv, "--target", "price", "--categorical", "zone,label",
                     "--out", str(tmp_path)] + extra)
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_target_column(self, tmp_path, fixture_csv):
        assert main(["train", "--data", fixture_csv, "--target", "nope", "--out", str(tmp_path)]) == 1

    def test_missing_file(self, tmp_path):
        assert main(["train", "--data", str(tmp_path / "x.csv"), "--target", "y", "--out", str(tmp_path)]) == 1

    def test_no_data_source(self, tmp_path):
        assert main(["train", "--out", str(tmp_path)]) == 1

    def test_divergence_exit_2(self, tmp_path, fixture_csv, capsys):
        code = main(["train", "--data", fixture_csv, "--target", "price", "--categorical", "zone,label",
                     "--optimizer", "sgd", "--lr", "1e6", "--batch", "4", "--epochs", "50",
                     "--out", str(tmp_path)])
        assert code == 2
        assert "diverged" in capsys.readouterr().err
        assert (tmp_path / "metrics_sgd.csv").exists()


class TestVerify:
    def test_default_passes(self, capsys):
        assert main(["verify"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out and "mse_hessian_psd" in out

    def test_forced_failure(self, capsys):
        assert main(["verify", "--force-failure"]) == 1
        captured = capsys.readouterr()
        assert "FAIL  mse_hessian_psd" in captured.out
        assert "mse_hessian_psd" in captured.err

    @pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
    def test_seed_does_not_change_verdict(self, seed):
        assert main(["verify", "--seed", str(seed)]) == 0
