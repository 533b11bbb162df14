"""Classification and latent-structure evaluation.

Accuracy and micro-F1 summarize label agreement; the silhouette score
quantifies how tightly each class clusters in latent space relative to its
nearest rival cluster. All functions are pure numpy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ConfusionCounts:
    """Pooled per-class true-positive / false-positive / false-negative
    counts for single-label predictions."""

    tp: dict
    fp: dict
    fn: dict
    total: int

    @classmethod
    def from_predictions(cls, preds, labels) -> "ConfusionCounts":
        preds = np.asarray(preds)
        labels = np.asarray(labels)
        if preds.shape != labels.shape or preds.ndim != 1:
            raise ValueError("preds and labels must be equal-length vectors")
        if preds.size == 0:
            raise ValueError("empty input")
        classes = np.union1d(preds, labels)
        tp, fp, fn = {}, {}, {}
        for c in classes:
            c = int(c)
            tp[c] = int(np.sum((preds == c) & (labels == c)))
            fp[c] = int(np.sum((preds == c) & (labels != c)))
            fn[c] = int(np.sum((preds != c) & (labels == c)))
        return cls(tp=tp, fp=fp, fn=fn, total=int(preds.size))


def accuracy(preds, labels) -> float:
    """Fraction of exact matches."""
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if preds.shape != labels.shape or preds.ndim != 1:
        raise ValueError("preds and labels must be equal-length vectors")
    if preds.size == 0:
        raise ValueError("empty input")
    return float(np.mean(preds == labels))


def micro_f1(preds, labels) -> float:
    """Micro-averaged F1 from globally pooled confusion counts.

    For single-label multiclass input this coincides exactly with accuracy
    (every error is one FP and one FN at once).
    """
    counts = ConfusionCounts.from_predictions(preds, labels)
    tp = sum(counts.tp.values())
    fp = sum(counts.fp.values())
    fn = sum(counts.fn.values())
    return 2.0 * tp / (2.0 * tp + fp + fn)


@dataclass
class SilhouetteReport:
    """Per-sample silhouette values plus their global and per-class means."""

    per_sample: np.ndarray
    mean: float
    per_class: dict

    def as_dict(self) -> dict:
        return {"mean": self.mean,
                "per_class": {str(k): v for k, v in self.per_class.items()},
                "n": int(self.per_sample.size)}


def silhouette_score(latents, labels, pca_threshold: float | None = None) -> SilhouetteReport:
    """Mean of (b - a) / max(a, b) over samples, with a the mean distance to
    own-cluster co-members and b the smallest mean distance to another
    cluster.

    Scores are computed on the raw latents; ``pca_threshold`` optionally
    compresses them first (diagnostics only, not the headline number).
    Samples in singleton clusters score 0, as do coincident-degenerate
    samples where max(a, b) == 0.
    """
    latents = np.asarray(latents, dtype=np.float64)
    labels = np.asarray(labels)
    if latents.ndim != 2 or labels.shape != (latents.shape[0],):
        raise ValueError("latents must be N x d with one label per row")
    n = latents.shape[0]
    if n < 3:
        raise ValueError("need at least 3 samples")
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError("need at least 2 classes")

    if pca_threshold is not None:
        from .boost import fit_pca, project
        proj = fit_pca(latents, pca_threshold)
        latents = project(proj, latents)

    diff = latents[:, None, :] - latents[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))

    sums = np.stack([dist[:, labels == c].sum(axis=1) for c in classes], axis=1)
    counts = np.array([(labels == c).sum() for c in classes])
    own_col = np.searchsorted(classes, labels)

    s = np.zeros(n)
    for i in range(n):
        k = own_col[i]
        if counts[k] > 1:
            a = sums[i, k] / (counts[k] - 1)  # dist[i, i] == 0 drops out
            b = min(sums[i, j] / counts[j] for j in range(classes.size) if j != k)
            m = max(a, b)
            s[i] = (b - a) / m if m > 0 else 0.0
        # singleton cluster: s[i] stays 0

    per_class = {int(c): float(s[labels == c].mean()) for c in classes}
    return SilhouetteReport(per_sample=s, mean=float(s.mean()), per_class=per_class)
