import numpy as np
import pytest

from itboost.cli import main
from itboost.boosting import load_model
from itboost.data import load_csv, save_csv
from itboost.synth import make_gaussian_dataset


def run(*argv):
    return main(list(argv))


@pytest.fixture
def small_csv(tmp_path):
    ds = make_gaussian_dataset(60, 3, separation=4.0, seed=0)
    path = tmp_path / "small.csv"
    save_csv(ds, path)
    return path


class TestSynth:
    def test_deterministic_bytes(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert run("synth", "--n", "50", "--d", "4", "--distractors", "6", "--sep", "2.0",
                   "--seed", "7", "--out", str(a)) == 0
        assert run("synth", "--n", "50", "--d", "4", "--distractors", "6", "--sep", "2.0",
                   "--seed", "7", "--out", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_output_loadable_with_distractors(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run("synth", "--n", "40", "--d", "2", "--distractors", "3", "--out", str(out)) == 0
        ds = load_csv(out, "label", positive_label="1")
        assert ds.n_rows == 40
        assert ds.n_features == 5


class TestTrain:
    def test_writes_model_and_trace(self, small_csv, tmp_path):
        model_path = tmp_path / "model.txt"
        trace_path = tmp_path / "trace.csv"
        code = run("train", "--data", str(small_csv), "--label", "label",
                   "--iterations", "5", "--loss", "squared",
                   "--out", str(model_path), "--trace", str(trace_path))
        assert code == 0
        model = load_model(model_path)
        assert len(model.trees) == 5
        assert trace_path.read_text().startswith("iteration,row_id,raw_C")

    def test_config_file_with_flag_override(self, small_csv, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("iterations = 9\nloss = squared\nmax_depth = 2\n")
        model_path = tmp_path / "model.txt"
        code = run("train", "--data", str(small_csv), "--config", str(cfg),
                   "--iterations", "4", "--out", str(model_path))
        assert code == 0
        model = load_model(model_path)
        assert len(model.trees) == 4  # flag wins
        assert model.config.max_depth == 2  # file survives


class TestEvaluate:
    def test_report_structure(self, small_csv, tmp_path, capsys):
        out = tmp_path / "report.csv"
        code = run("evaluate", "--data", str(small_csv), "--label", "label", "--k", "5",
                   "--iterations", "5", "--loss", "squared", "--out", str(out))
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 8  # header + 5 folds + mean + std
        printed = capsys.readouterr().out
        assert "acc_mean=" in printed
        assert "trust_seconds=" in printed

    def test_threads_flag(self, small_csv, tmp_path):
        out = tmp_path / "report.csv"
        code = run("evaluate", "--data", str(small_csv), "--k", "3", "--iterations", "3",
                   "--loss", "squared", "--threads", "3", "--out", str(out))
        assert code == 0


class TestNoiseSweep:
    def test_rates_times_modes_rows(self, small_csv, tmp_path):
        out = tmp_path / "sweep.csv"
        code = run("noise-sweep", "--data", str(small_csv), "--kind", "symmetric",
                   "--rates", "0.1,0.3,0.4", "--modes", "disabled,enabled",
                   "--k", "3", "--iterations", "4", "--loss", "squared", "--out", str(out))
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 1 + 6  # header + 3 rates x 2 modes
        assert lines[0].startswith("mode,kind,rate")


class TestAblate:
    def test_two_encoding_rows(self, small_csv, tmp_path, capsys):
        out = tmp_path / "ablate.csv"
        code = run("ablate", "--data", str(small_csv), "--k", "3", "--iterations", "5",
                   "--loss", "squared", "--out", str(out))
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 3
        assert lines[0].startswith("encoding,")
        assert lines[1].startswith("binary-sign")
        assert lines[2].startswith("quantized")
        assert "binary_vs_quantized_time_ratio=" in capsys.readouterr().out


class TestTrajectoryAndBounds:
    def test_end_to_end_pipeline(self, small_csv, tmp_path, capsys):
        curves = tmp_path / "curves.csv"
        mask = tmp_path / "mask.csv"
        trace = tmp_path / "trace.csv"
        code = run("trajectory", "--data", str(small_csv), "--noise-kind", "symmetric",
                   "--noise-rate", "0.25", "--iterations", "10", "--loss", "squared",
                   "--out", str(curves), "--mask-out", str(mask), "--trace-out", str(trace))
        assert code == 0
        header = curves.read_text().splitlines()[0]
        assert header.startswith("iteration,")
        assert "mean_weight_noisy" in header

        report = tmp_path / "bounds.csv"
        code = run("verify-bounds", "--trace", str(trace), "--mask", str(mask),
                   "--eps", "0.1", "--delta", "0.05", "--out", str(report))
        assert code == 0
        printed = capsys.readouterr().out
        assert "required_group_size=185" in printed
        assert "jensen_satisfied=True" in printed
        assert "hoeffding_satisfied=True" in printed
        assert "ratio_bound_satisfied=True" in printed
        body = report.read_text()
        assert body.startswith("key,value")


class TestExitCodes:
    def test_usage_error_unknown_flag(self, small_csv, tmp_path):
        assert run("evaluate", "--data", str(small_csv), "--bogus", "1",
                   "--out", str(tmp_path / "r.csv")) == 1

    def test_usage_error_missing_subcommand(self):
        assert run() == 1

    def test_usage_error_bad_trust_value(self, small_csv, tmp_path):
        assert run("evaluate", "--data", str(small_csv), "--trust", "never",
                   "--out", str(tmp_path / "r.csv")) == 1

    def test_data_error_missing_file(self, tmp_path):
        assert run("evaluate", "--data", str(tmp_path / "absent.csv"),
                   "--out", str(tmp_path / "r.csv")) == 2

    def test_data_error_bad_cell(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,label\nfoo,1\n2.0,0\n")
        assert run("evaluate", "--data", str(bad), "--out", str(tmp_path / "r.csv")) == 2

    def test_seed_defaults_to_42(self, small_csv, tmp_path):
        model_path = tmp_path / "m.txt"
        assert run("train", "--data", str(small_csv), "--iterations", "2",
                   "--loss", "squared", "--out", str(model_path)) == 0
        assert load_model(model_path).config.seed == 42


class TestUndersampleFlag:
    def test_before_split_order(self, tmp_path, capsys):
        rng = np.random.default_rng(3)
        from itboost.data import Dataset

        labels = np.array([1] * 30 + [-1] * 90)
        ds = Dataset(rng.normal(size=(120, 3)) + labels[:, None], labels, np.arange(120))
        path = tmp_path / "imb.csv"
        save_csv(ds, path)
        out = tmp_path / "r.csv"
        code = run("evaluate", "--data", str(path), "--k", "3", "--iterations", "3",
                   "--loss", "squared", "--undersample", "before", "--out", str(out))
        assert code == 0

    def test_after_split_order(self, tmp_path):
        rng = np.random.default_rng(4)
        from itboost.data import Dataset

        labels = np.array([1] * 30 + [-1] * 90)
        ds = Dataset(rng.normal(size=(120, 3)) + labels[:, None], labels, np.arange(120))
        path = tmp_path / "imb.csv"
        save_csv(ds, path)
        out = tmp_path / "r.csv"
        code = run("evaluate", "--data", str(path), "--k", "3", "--iterations", "3",
                   "--loss", "squared", "--undersample", "after", "--out", str(out))
        assert code == 0
