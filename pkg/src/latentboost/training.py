"""Supervised training loop: per-batch composite loss, plateau learning-rate
scheduling, early stopping on validation accuracy, and seeded multi-trial
runs reduced in seed order."""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .boost import (ScheduleState, alpha_schedule, beta_schedule,
                    compute_cluster_stats, fit_pca, latent_boost_loss, project)
from .data import DatasetSplit
from .losses import (Batch, MarginConfig, contrastive_loss, cross_entropy,
                     magnet_loss, npair_loss, triplet_loss, weighted_total)
from .metrics import accuracy, micro_f1, silhouette_score
from .model import MlpModel
from .tensor import AdamState, Tape, adam_step, backward, grad_wrt

log = logging.getLogger(__name__)

LOSS_KINDS = ("none", "contrast", "triplet", "npair", "magnet", "latent_boost")


@dataclass
class TrainConfig:
    lam: float = 0.5
    loss_kind: str = "latent_boost"
    margins: MarginConfig = field(default_factory=MarginConfig)
    alpha0: float = 1.0
    beta0: float = 1.0
    pca_threshold: float = 0.95
    learning_rate: float = 5e-3
    batch_size: int = 64
    max_epochs: int = 60
    plateau_patience: int = 10
    plateau_factor: float = 5.0
    early_stop_patience: int = 20
    seed: int = 0
    trials: int = 5
    dropout_prob: float = 0.0
    warmup_epochs: int = 3

    def validate(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {self.lam}")
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss_kind {self.loss_kind!r}")
        if self.loss_kind == "none" and self.lam > 0.0:
            raise ValueError("lambda > 0 requires a distance loss_kind")
        if self.plateau_patience < 1 or self.early_stop_patience < 1:
            raise ValueError("patience values must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be >= 1")
        if self.learning_rate <= 0 or self.plateau_factor <= 1:
            raise ValueError("learning_rate must be > 0 and plateau_factor > 1")
        if self.warmup_epochs < 0:
            raise ValueError("warmup_epochs must be >= 0")
        if not 0.0 <= self.dropout_prob < 1.0:
            raise ValueError("dropout_prob must be in [0, 1)")


class EarlyStopper:
    """Stops once validation accuracy has not strictly improved for
    ``patience`` consecutive epochs."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = -np.inf
        self.epochs_since_improvement = 0

    def update(self, value: float) -> bool:
        if value > self.best:
            self.best = value
            self.epochs_since_improvement = 0
        else:
            self.epochs_since_improvement += 1
        return self.epochs_since_improvement >= self.patience


class PlateauScheduler:
    """Divides the learning rate by ``factor`` after ``patience`` epochs
    without strict improvement, then resets its stall counter."""

    def __init__(self, lr: float, patience: int, factor: float):
        self.lr = lr
        self.patience = patience
        self.factor = factor
        self.best = -np.inf
        self.stall = 0

    def update(self, value: float) -> float:
        if value > self.best:
            self.best = value
            self.stall = 0
        else:
            self.stall += 1
            if self.stall >= self.patience:
                self.lr /= self.factor
                self.stall = 0
        return self.lr


@dataclass
class EpochStats:
    epoch: int
    lr: float
    alpha: float | None
    beta: float | None
    mean_pca_dim: float | None
    train_ce: float
    train_dist: float
    train_total: float
    batch_records: list = field(default_factory=list)


def _distance_loss(kind: str, batch: Batch, cfg: TrainConfig, epoch: int):
    """Build the configured distance term; returns (loss, pca_dim or None)."""
    if kind == "contrast":
        return contrastive_loss(batch, cfg.margins), None
    if kind == "triplet":
        return triplet_loss(batch, cfg.margins), None
    if kind == "npair":
        return npair_loss(batch), None
    if kind == "magnet":
        stats = compute_cluster_stats(batch.latents.data, batch.labels)
        return magnet_loss(batch, cfg.margins, stats), None
    if kind == "latent_boost":
        proj = fit_pca(batch.latents.data, cfg.pca_threshold)
        stats = compute_cluster_stats(project(proj, batch.latents.data),
                                      batch.labels)
        sched = ScheduleState(alpha0=cfg.alpha0, beta0=cfg.beta0, epoch=epoch,
                              total_epochs=cfg.max_epochs)
        loss = latent_boost_loss(batch, proj, stats,
                                 alpha_schedule(sched), beta_schedule(sched))
        return loss, proj.selected_dim
    raise ValueError(f"unknown loss_kind {kind!r}")


def train_epoch(model: MlpModel, train_x, train_y, cfg: TrainConfig, epoch: int,
                adam: AdamState, shuffle_rng, dropout_rng,
                batch_hook=None) -> EpochStats:
    """One pass over the shuffled training data.

    The distance term is skipped (cross-entropy only, effective lambda 0)
    during warm-up epochs and for batches containing a single class.
    """
    n = train_x.shape[0]
    order = shuffle_rng.permutation(n)
    want_dist = cfg.loss_kind != "none" and cfg.lam > 0.0 and epoch >= cfg.warmup_epochs

    sched = ScheduleState(alpha0=cfg.alpha0, beta0=cfg.beta0, epoch=epoch,
                          total_epochs=cfg.max_epochs)
    alpha = alpha_schedule(sched) if cfg.loss_kind == "latent_boost" else None
    beta = beta_schedule(sched) if cfg.loss_kind == "latent_boost" else None

    sum_ce = sum_dist = sum_total = 0.0
    pca_dims = []
    records = []
    for start in range(0, n, cfg.batch_size):
        idx = order[start:start + cfg.batch_size]
        xb, yb = train_x[idx], train_y[idx]
        tape = Tape()
        out = model.forward(xb, tape=tape, train=True, dropout_rng=dropout_rng)
        ce = cross_entropy(out.logits, yb)

        eff_lam = 0.0
        dist_value = 0.0
        total = ce
        if want_dist:
            if np.unique(yb).size < 2:
                warnings.warn(f"single-class batch at epoch {epoch}: "
                              "distance term skipped", RuntimeWarning)
            else:
                dist, pca_dim = _distance_loss(cfg.loss_kind,
                                               Batch(out.latents, yb), cfg, epoch)
                total = weighted_total(dist, ce, cfg.lam)
                eff_lam = cfg.lam
                dist_value = float(dist.data)
                if pca_dim is not None:
                    pca_dims.append(pca_dim)

        grads = backward(tape, total)
        adam_step(out.params, [grad_wrt(grads, p) for p in out.params], adam)

        nb = len(idx)
        rec = {"n": nb, "ce": float(ce.data), "dist": dist_value,
               "total": float(total.data), "effective_lambda": eff_lam}
        records.append(rec)
        if batch_hook is not None:
            batch_hook(logits=out.logits.data, latents=out.latents.data,
                       labels=yb, record=rec)
        sum_ce += rec["ce"] * nb
        sum_dist += rec["dist"] * nb
        sum_total += rec["total"] * nb

    mean_dim = float(np.mean(pca_dims)) if pca_dims else None
    if cfg.loss_kind == "latent_boost":
        log.info("epoch %d: pca_dim=%s alpha=%.6f beta=%.8f",
                 epoch, f"{mean_dim:.2f}" if mean_dim is not None else "-", alpha, beta)
    return EpochStats(epoch=epoch, lr=adam.learning_rate, alpha=alpha, beta=beta,
                      mean_pca_dim=mean_dim, train_ce=sum_ce / n,
                      train_dist=sum_dist / n, train_total=sum_total / n,
                      batch_records=records)


def evaluate_split(model: MlpModel, x, y) -> dict:
    out = model.forward(x)
    preds = np.argmax(out.logits.data, axis=1)
    return {"preds": preds, "latents": out.latents.data,
            "accuracy": accuracy(preds, y)}


@dataclass
class TrialResult:
    seed: int
    history: list
    epochs_used: int
    best_epoch: int
    test_accuracy: float
    test_micro_f1: float
    test_silhouette: float
    test_preds: np.ndarray
    test_latents: np.ndarray
    model: MlpModel  # parameters restored to the best-validation epoch


def run_training(widths, data: DatasetSplit, cfg: TrainConfig,
                 seed: int | None = None, batch_hook=None) -> TrialResult:
    """Train one seeded trial to early stop (or the epoch budget), restore
    the best-validation parameters, and score the test split."""
    cfg.validate()
    seed = cfg.seed if seed is None else seed
    model = MlpModel(widths, dropout_prob=cfg.dropout_prob, seed=seed)
    adam = AdamState.for_params(model.parameters(), learning_rate=cfg.learning_rate)
    shuffle_rng = np.random.default_rng([seed, 1])
    dropout_rng = np.random.default_rng([seed, 2])
    stopper = EarlyStopper(cfg.early_stop_patience)
    plateau = PlateauScheduler(cfg.learning_rate, cfg.plateau_patience,
                               cfg.plateau_factor)

    best_val = -np.inf
    best_epoch = -1
    best_params = model.snapshot()
    history = []
    epochs_used = 0
    for epoch in range(cfg.max_epochs):
        lr_used = adam.learning_rate
        stats = train_epoch(model, data.train_x, data.train_y, cfg, epoch, adam,
                            shuffle_rng, dropout_rng, batch_hook=batch_hook)
        val_acc = evaluate_split(model, data.val_x, data.val_y)["accuracy"]
        epochs_used = epoch + 1
        history.append({"epoch": epoch, "lr": lr_used, "alpha": stats.alpha,
                        "beta": stats.beta, "pca_dim": stats.mean_pca_dim,
                        "train_ce": stats.train_ce, "train_dist": stats.train_dist,
                        "train_total": stats.train_total, "val_acc": val_acc})
        if val_acc > best_val:
            best_val = val_acc
            best_epoch = epoch
            best_params = model.snapshot()
        adam.learning_rate = plateau.update(val_acc)
        if stopper.update(val_acc):
            break

    model.set_parameters(best_params)
    test = evaluate_split(model, data.test_x, data.test_y)
    sil = silhouette_score(test["latents"], data.test_y)
    return TrialResult(seed=seed, history=history, epochs_used=epochs_used,
                       best_epoch=best_epoch,
                       test_accuracy=test["accuracy"],
                       test_micro_f1=micro_f1(test["preds"], data.test_y),
                       test_silhouette=sil.mean,
                       test_preds=test["preds"], test_latents=test["latents"],
                       model=model)


def run_trials(widths, data: DatasetSplit, cfg: TrainConfig,
               threads: int = 1) -> list[TrialResult]:
    """Run cfg.trials seeded trials (seeds cfg.seed .. cfg.seed + trials - 1).

    Trials are independent; with threads > 1 they run concurrently but are
    returned in seed order, so parallelism cannot change the output.
    """
    cfg.validate()
    seeds = [cfg.seed + k for k in range(cfg.trials)]
    if threads <= 1 or len(seeds) == 1:
        return [run_training(widths, data, cfg, seed=s) for s in seeds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(run_training, widths, data, cfg, s) for s in seeds]
        return [f.result() for f in futures]


def summarize_trials(results: list[TrialResult]) -> dict:
    """Mean and (n-1)-divisor std of the headline metrics across trials."""
    def agg(values):
        arr = np.asarray(values, dtype=np.float64)
        std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        return float(arr.mean()), std

    acc = agg([r.test_accuracy for r in results])
    f1 = agg([r.test_micro_f1 for r in results])
    epochs = agg([r.epochs_used for r in results])
    sil = agg([r.test_silhouette for r in results])
    return {"acc_mean": acc[0], "acc_std": acc[1],
            "f1_mean": f1[0], "f1_std": f1[1],
            "epochs_mean": epochs[0], "epochs_std": epochs[1],
            "sil_mean": sil[0], "sil_std": sil[1]}
