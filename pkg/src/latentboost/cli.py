"""Command-line entry point: run config-driven experiments and sweeps, then
report result tables with improvement percentages against the baseline.

Exit codes: 0 success, 1 runtime failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .data import generate_blobs, load_idx
from .training import run_trials, summarize_trials

RESULTS_HEADER = ["loss_kind", "lambda", "acc_mean", "acc_std", "f1_mean",
                  "f1_std", "epochs_mean", "epochs_std", "sil_mean", "sil_std"]


def _fmt(x: float) -> str:
    return "%.6g" % float(x)


def _sweep_rows(cfg: ExperimentConfig) -> list:
    """(label, loss_kind, lambda) per row; a lambda of 0 is always present
    because every comparison is against the plain cross-entropy baseline."""
    rows = []
    if not any(l == 0.0 for l in cfg.sweep_lambdas):
        rows.append(("baseline", "none", 0.0))
    for kind in cfg.sweep_loss_kinds:
        for lam in cfg.sweep_lambdas:
            if lam == 0.0:
                rows.append(("baseline", "none", 0.0))
            else:
                rows.append((kind, kind, lam))
    return rows


def _build_dataset(cfg: ExperimentConfig):
    if cfg.dataset_kind == "blobs":
        return generate_blobs(cfg.blob_spec)
    return load_idx(cfg.idx_paths[0], cfg.idx_paths[1], seed=cfg.idx_split_seed)


def run_experiment(cfg: ExperimentConfig, out_dir: Path, threads: int = 1) -> None:
    data = _build_dataset(cfg)
    widths = [data.dim, *cfg.hidden, data.num_classes]

    table_rows = []
    log_records = []
    latent_rows = []
    cache = {}  # duplicate lambda=0 rows reuse one deterministic run
    for label, kind, lam in _sweep_rows(cfg):
        key = (kind, lam)
        if key not in cache:
            row_cfg = replace(cfg.train, lam=lam, loss_kind=kind)
            cache[key] = run_trials(widths, data, row_cfg, threads=threads)
        results = cache[key]
        stats = summarize_trials(results)
        table_rows.append({"loss_kind": label, "lambda": lam, **stats})
        for trial, res in enumerate(results):
            for rec in res.history:
                log_records.append({"loss_kind": label, "lambda": lam,
                                    "trial": trial, **rec})
        first = results[0]
        for label_val, pred, z in zip(data.test_y, first.test_preds,
                                      first.test_latents):
            latent_rows.append([label, _fmt(lam), "0", str(int(label_val)),
                                str(int(pred))] + [_fmt(v) for v in z])

    out_dir.mkdir(parents=True, exist_ok=True)
    _write_results_csv(out_dir / "results.csv", table_rows)
    with open(out_dir / "runlog.jsonl", "w", newline="\n") as f:
        for rec in log_records:
            f.write(json.dumps(rec) + "\n")
    latent_dim = len(latent_rows[0]) - 5 if latent_rows else 0
    with open(out_dir / "latents_test.csv", "w", newline="\n") as f:
        f.write(",".join(["loss_kind", "lambda", "trial", "label", "pred"]
                         + [f"z{i}" for i in range(latent_dim)]) + "\n")
        for row in latent_rows:
            f.write(",".join(row) + "\n")


def _write_results_csv(path: Path, rows: list) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(",".join(RESULTS_HEADER) + "\n")
        for row in rows:
            f.write(",".join([row["loss_kind"]]
                             + [_fmt(row[k]) for k in RESULTS_HEADER[1:]]) + "\n")


def read_results_csv(path) -> list:
    """Re-parse results.csv into the row dicts used by report()."""
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != RESULTS_HEADER:
            raise ValueError(f"unexpected results header: {reader.fieldnames}")
        rows = []
        for rec in reader:
            row = {"loss_kind": rec["loss_kind"]}
            for k in RESULTS_HEADER[1:]:
                row[k] = float(rec[k])
            rows.append(row)
        return rows


def report(path, stream=None) -> None:
    """Print the results table with percentage change vs the lambda=0 row."""
    stream = stream or sys.stdout
    rows = read_results_csv(path)
    baseline = next((r for r in rows if r["lambda"] == 0.0), None)
    if baseline is None:
        print("warning: no lambda=0 baseline row; improvement columns omitted",
              file=sys.stderr)

    metrics = [("acc", "accuracy"), ("f1", "micro-F1"),
               ("epochs", "epochs"), ("sil", "silhouette")]
    header = f"{'loss_kind':<14}{'lambda':>8}"
    for key, name in metrics:
        header += f"{name + ' (mean±std)':>26}"
        if baseline is not None:
            header += f"{'Δ%':>10}"
    print(header, file=stream)
    for r in rows:
        line = f"{r['loss_kind']:<14}{r['lambda']:>8.4g}"
        for key, _ in metrics:
            cell = f"{r[key + '_mean']:.4f} ± {r[key + '_std']:.4f}"
            line += f"{cell:>26}"
            if baseline is not None:
                base = baseline[key + "_mean"]
                if abs(base) < 1e-12:
                    line += f"{'-':>10}"
                else:
                    delta = (r[key + "_mean"] - base) / abs(base) * 100.0
                    line += f"{delta:>+9.2f}%"
        print(line, file=stream)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="latentboost",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the experiment in a TOML config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="output directory override")
    p_run.add_argument("--threads", type=int, default=1)

    p_rep = sub.add_parser("report", help="pretty-print a results.csv")
    p_rep.add_argument("--input", required=True)

    args = parser.parse_args(argv)
    if args.command == "run":
        try:
            cfg = load_config(args.config)
            if "LB_SEED" in os.environ:
                cfg.train.seed = int(os.environ["LB_SEED"])
                cfg.train.validate()
        except (ConfigError, ValueError) as e:
            print(f"config error: {e}", file=sys.stderr)
            return 2
        try:
            out_dir = Path(args.out) if args.out else Path(cfg.output_dir)
            run_experiment(cfg, out_dir, threads=args.threads)
        except Exception as e:
            print(f"run failed: {e}", file=sys.stderr)
            return 1
        return 0
    try:
        report(args.input)
    except (OSError, ValueError) as e:
        print(f"report failed: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
