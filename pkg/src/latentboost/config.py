"""TOML experiment configuration: dataset, model, training, sweep, output.

Unknown keys are rejected so silent typos cannot change an experiment.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .data import SyntheticBlobSpec, random_blob_means
from .losses import MarginConfig
from .training import LOSS_KINDS, TrainConfig


class ConfigError(ValueError):
    """Invalid experiment configuration."""


_SECTION_KEYS = {
    "dataset": {"kind", "num_classes", "dim", "samples_per_class", "stddev",
                "separation", "seed", "means", "images", "labels", "split_seed"},
    "model": {"hidden", "dropout"},
    "training": {"lambda", "loss_kind", "learning_rate", "batch_size",
                 "max_epochs", "plateau_patience", "plateau_factor",
                 "early_stop_patience", "seed", "trials", "warmup_epochs",
                 "alpha0", "beta0", "pca_threshold", "contrast_pos_margin",
                 "contrast_neg_margin", "triplet_margin", "magnet_alpha"},
    "sweep": {"lambdas", "loss_kinds"},
    "output": {"dir"},
}


@dataclass
class ExperimentConfig:
    dataset_kind: str
    blob_spec: SyntheticBlobSpec | None
    idx_paths: tuple | None
    idx_split_seed: int
    hidden: list
    train: TrainConfig
    sweep_lambdas: list
    sweep_loss_kinds: list
    output_dir: str = "results"


def _check_keys(doc: dict) -> None:
    unknown_sections = set(doc) - set(_SECTION_KEYS)
    if unknown_sections:
        raise ConfigError(f"unknown config section(s): {sorted(unknown_sections)}")
    for section, allowed in _SECTION_KEYS.items():
        extra = set(doc.get(section, {})) - allowed
        if extra:
            raise ConfigError(f"unknown key(s) in [{section}]: {sorted(extra)}")


def _dataset_from(doc: dict):
    ds = doc.get("dataset")
    if not ds:
        raise ConfigError("missing [dataset] section")
    kind = ds.get("kind", "blobs")
    if kind == "blobs":
        required = {"num_classes", "dim", "samples_per_class", "stddev", "seed"}
        missing = required - set(ds)
        if missing:
            raise ConfigError(f"[dataset] missing key(s): {sorted(missing)}")
        if "means" in ds:
            means = np.asarray(ds["means"], dtype=np.float64)
        elif "separation" in ds:
            means = random_blob_means(ds["num_classes"], ds["dim"],
                                      ds["separation"], ds["seed"])
        else:
            raise ConfigError("[dataset] needs either 'means' or 'separation'")
        if means.shape != (ds["num_classes"], ds["dim"]):
            raise ConfigError(f"[dataset] means must be "
                              f"{ds['num_classes']} x {ds['dim']}")
        spec = SyntheticBlobSpec(means=means, stddev=float(ds["stddev"]),
                                 samples_per_class=int(ds["samples_per_class"]),
                                 seed=int(ds["seed"]))
        return "blobs", spec, None, 0
    if kind == "idx":
        if "images" not in ds or "labels" not in ds:
            raise ConfigError("[dataset] kind 'idx' needs 'images' and 'labels' paths")
        return "idx", None, (ds["images"], ds["labels"]), int(ds.get("split_seed", 0))
    raise ConfigError(f"unknown dataset kind {kind!r}")


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as f:
            doc = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"invalid TOML in {path}: {e}") from None
    return parse_config(doc)


def parse_config(doc: dict) -> ExperimentConfig:
    _check_keys(doc)
    kind, blob_spec, idx_paths, idx_seed = _dataset_from(doc)

    model = doc.get("model", {})
    hidden = [int(w) for w in model.get("hidden", [32, 16])]
    if not hidden:
        raise ConfigError("[model] hidden must list at least one width")

    tr = dict(doc.get("training", {}))
    margins = MarginConfig(
        contrast_pos_margin=float(tr.pop("contrast_pos_margin", 0.0)),
        contrast_neg_margin=float(tr.pop("contrast_neg_margin", 1.0)),
        triplet_margin=float(tr.pop("triplet_margin", 0.05)),
        magnet_alpha=float(tr.pop("magnet_alpha", 1.0)))
    train = TrainConfig(
        lam=float(tr.pop("lambda", 0.5)),
        loss_kind=str(tr.pop("loss_kind", "latent_boost")),
        margins=margins,
        alpha0=float(tr.pop("alpha0", 1.0)),
        beta0=float(tr.pop("beta0", 1.0)),
        pca_threshold=float(tr.pop("pca_threshold", 0.95)),
        learning_rate=float(tr.pop("learning_rate", 5e-3)),
        batch_size=int(tr.pop("batch_size", 64)),
        max_epochs=int(tr.pop("max_epochs", 60)),
        plateau_patience=int(tr.pop("plateau_patience", 10)),
        plateau_factor=float(tr.pop("plateau_factor", 5.0)),
        early_stop_patience=int(tr.pop("early_stop_patience", 20)),
        seed=int(tr.pop("seed", 0)),
        trials=int(tr.pop("trials", 5)),
        dropout_prob=float(model.get("dropout", 0.0)),
        warmup_epochs=int(tr.pop("warmup_epochs", 3)))
    try:
        train.validate()
    except ValueError as e:
        raise ConfigError(str(e)) from None

    sweep = doc.get("sweep", {})
    lambdas = [float(v) for v in sweep.get("lambdas", [train.lam])]
    kinds = [str(k) for k in sweep.get("loss_kinds", [train.loss_kind])]
    for lam in lambdas:
        if not 0.0 <= lam <= 1.0:
            raise ConfigError(f"sweep lambda {lam} outside [0, 1]")
    for k in kinds:
        if k not in LOSS_KINDS:
            raise ConfigError(f"sweep loss_kind {k!r} not recognized")
        if k == "none" and any(l > 0.0 for l in lambdas):
            raise ConfigError("loss_kind 'none' cannot be swept with lambda > 0")

    out_dir = doc.get("output", {}).get("dir", "results")
    return ExperimentConfig(dataset_kind=kind, blob_spec=blob_spec,
                            idx_paths=idx_paths, idx_split_seed=idx_seed,
                            hidden=hidden, train=train,
                            sweep_lambdas=lambdas, sweep_loss_kinds=kinds,
                            output_dir=str(out_dir))
