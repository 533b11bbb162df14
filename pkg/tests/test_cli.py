"""Config parsing and the command-line workflow: sweeps, result files,
determinism, exit codes, and the report view."""

import io
import json
import warnings

import pytest

from latentboost.cli import (main, read_results_csv, report, RESULTS_HEADER,
                             _sweep_rows)
from latentboost.config import ConfigError, load_config, parse_config

BASE_TOML = """
[dataset]
kind = "blobs"
num_classes = 3
dim = 6
samples_per_class = 30
stddev = 1.0
separation = 3.0
seed = 7

[model]
hidden = [16, 8]

[training]
lambda = 0.5
loss_kind = "latent_boost"
learning_rate = 0.005
batch_size = 32
max_epochs = 3
seed = 1
trials = 2
warmup_epochs = 1

[sweep]
lambdas = [0.0, 0.5]
loss_kinds = ["magnet", "latent_boost"]
"""


def write_config(tmp_path, text=BASE_TOML, name="exp.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestConfigParsing:
    def test_valid_config(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        assert cfg.dataset_kind == "blobs"
        assert cfg.blob_spec.num_classes == 3
        assert cfg.hidden == [16, 8]
        assert cfg.train.lam == 0.5
        assert cfg.sweep_lambdas == [0.0, 0.5]

    def test_unknown_section_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown config section"):
            load_config(write_config(tmp_path, BASE_TOML + "\n[extra]\nx = 1\n"))

    def test_unknown_key_rejected(self, tmp_path):
        bad = BASE_TOML.replace("stddev = 1.0", "stddev = 1.0\ntypo_key = 3")
        with pytest.raises(ConfigError, match="typo_key"):
            load_config(write_config(tmp_path, bad))

    def test_training_invariants_revalidated(self, tmp_path):
        bad = BASE_TOML.replace('lambda = 0.5', 'lambda = 1.5')
        with pytest.raises(ConfigError, match="lambda"):
            load_config(write_config(tmp_path, bad))

    def test_sweep_lambda_range_checked(self, tmp_path):
        bad = BASE_TOML.replace("lambdas = [0.0, 0.5]", "lambdas = [0.0, 2.0]")
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path, bad))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.toml")

    def test_idx_dataset_block(self):
        doc = {"dataset": {"kind": "idx", "images": "a", "labels": "b"},
               "training": {"lambda": 0.0, "loss_kind": "none"}}
        cfg = parse_config(doc)
        assert cfg.dataset_kind == "idx"
        assert cfg.idx_paths == ("a", "b")


class TestSweepRows:
    def test_cartesian_product_with_zero(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        rows = _sweep_rows(cfg)
        assert len(rows) == 4  # 2 kinds x 2 lambdas
        labels = [r[0] for r in rows]
        assert labels.count("baseline") == 2

    def test_baseline_injected_when_absent(self, tmp_path):
        toml = BASE_TOML.replace("lambdas = [0.0, 0.5]", "lambdas = [0.25, 0.5]")
        cfg = load_config(write_config(tmp_path, toml))
        rows = _sweep_rows(cfg)
        assert rows[0] == ("baseline", "none", 0.0)
        assert len(rows) == 5

    def test_eight_row_cartesian(self, tmp_path):
        toml = BASE_TOML.replace("lambdas = [0.0, 0.5]",
                                 "lambdas = [0.0, 0.25, 0.5, 0.75]")
        cfg = load_config(write_config(tmp_path, toml))
        assert len(_sweep_rows(cfg)) == 8


@pytest.fixture
def run_dir(tmp_path):
    config = write_config(tmp_path)
    out = tmp_path / "out"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        code = main(["run", "--config", str(config), "--out", str(out)])
    assert code == 0
    return out


class TestRunCommand:
    def test_outputs_exist_with_schema(self, run_dir):
        text = (run_dir / "results.csv").read_text()
        lines = text.strip().split("\n")
        assert lines[0] == ",".join(RESULTS_HEADER)
        assert len(lines) == 5  # header + 4 sweep rows
        assert (run_dir / "runlog.jsonl").exists()
        assert (run_dir / "latents_test.csv").exists()

    def test_lambda_zero_rows_labeled_baseline(self, run_dir):
        rows = read_results_csv(run_dir / "results.csv")
        for r in rows:
            if r["lambda"] == 0.0:
                assert r["loss_kind"] == "baseline"

    def test_runlog_records_schema(self, run_dir):
        with open(run_dir / "runlog.jsonl") as f:
            records = [json.loads(line) for line in f]
        assert records
        expected = {"loss_kind", "lambda", "trial", "epoch", "lr", "alpha",
                    "beta", "pca_dim", "train_ce", "train_dist", "train_total",
                    "val_acc"}
        assert all(set(r) == expected for r in records)

    def test_latents_dump_covers_every_row(self, run_dir):
        lines = (run_dir / "latents_test.csv").read_text().strip().split("\n")
        header = lines[0].split(",")
        assert header[:5] == ["loss_kind", "lambda", "trial", "label", "pred"]
        assert header[5] == "z0"
        kinds = {line.split(",")[0] for line in lines[1:]}
        assert kinds == {"baseline", "magnet", "latent_boost"}

    def test_reparse_round_trips(self, run_dir):
        from latentboost.cli import _write_results_csv
        rows = read_results_csv(run_dir / "results.csv")
        _write_results_csv(run_dir / "rewritten.csv", rows)
        assert (run_dir / "rewritten.csv").read_bytes() == \
            (run_dir / "results.csv").read_bytes()

    def test_rerun_is_byte_identical_across_threads(self, tmp_path):
        config = write_config(tmp_path)
        outputs = []
        for name, threads in (("a", "1"), ("b", "1"), ("c", "4")):
            out = tmp_path / name
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                assert main(["run", "--config", str(config), "--out", str(out),
                             "--threads", threads]) == 0
            outputs.append((out / "results.csv").read_bytes())
        assert outputs[0] == outputs[1] == outputs[2]

    def test_seed_env_override(self, tmp_path, monkeypatch):
        config = write_config(tmp_path)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            main(["run", "--config", str(config), "--out", str(tmp_path / "d")])
            monkeypatch.setenv("LB_SEED", "99")
            main(["run", "--config", str(config), "--out", str(tmp_path / "e")])
        default = (tmp_path / "d" / "results.csv").read_bytes()
        overridden = (tmp_path / "e" / "results.csv").read_bytes()
        assert default != overridden

    def test_bad_config_exits_2(self, tmp_path, capsys):
        bad = write_config(tmp_path, BASE_TOML + "\n[extra]\nx=1\n", "bad.toml")
        assert main(["run", "--config", str(bad)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_runtime_failure_exits_1(self, tmp_path, capsys):
        toml = """
[dataset]
kind = "idx"
images = "/nonexistent/images"
labels = "/nonexistent/labels"

[training]
lambda = 0.0
loss_kind = "none"
max_epochs = 1
trials = 1
"""
        config = write_config(tmp_path, toml, "idx.toml")
        assert main(["run", "--config", str(config)]) == 1
        assert "run failed" in capsys.readouterr().err


class TestReport:
    def make_csv(self, tmp_path, rows):
        p = tmp_path / "results.csv"
        lines = [",".join(RESULTS_HEADER)]
        for r in rows:
            lines.append(",".join(str(v) for v in r))
        p.write_text("\n".join(lines) + "\n")
        return p

    def test_improvement_percentages(self, tmp_path):
        p = self.make_csv(tmp_path, [
            ["baseline", 0, 0.80, 0.01, 0.80, 0.01, 40.67, 4.19, 0.347, 0.02],
            ["latent_boost", 0.5, 0.84, 0.01, 0.84, 0.01, 34.67, 3.09, 0.395, 0.02],
        ])
        buf = io.StringIO()
        report(p, stream=buf)
        out = buf.getvalue()
        assert "+5.00%" in out          # (0.84 - 0.80) / 0.80
        assert "-14.75%" in out         # fewer epochs print negative
        assert "+13.83%" in out         # silhouette gain

    def test_identical_rows_zero_improvement(self, tmp_path):
        row = ["baseline", 0, 0.8, 0.0, 0.8, 0.0, 40.0, 0.0, 0.3, 0.0]
        p = self.make_csv(tmp_path, [row, ["x", 0.5] + row[2:]])
        buf = io.StringIO()
        report(p, stream=buf)
        assert "+0.00%" in buf.getvalue()

    def test_missing_baseline_warns_and_omits(self, tmp_path, capsys):
        p = self.make_csv(tmp_path, [
            ["latent_boost", 0.5, 0.84, 0.01, 0.84, 0.01, 34.0, 3.0, 0.4, 0.02],
        ])
        buf = io.StringIO()
        report(p, stream=buf)
        assert "%" not in buf.getvalue().split("\n")[1]
        assert "baseline" in capsys.readouterr().err

    def test_report_bad_file_exits_2(self, tmp_path):
        assert main(["report", "--input", str(tmp_path / "missing.csv")]) == 2
