"""Distance-metric losses over labeled batches, plus cross-entropy and the
weighted-sum combination.

All losses take a :class:`Batch` whose latents live on a tape and return a
scalar tensor differentiable w.r.t. those latents. Pair/triplet enumeration
is exhaustive (every unordered pair; every (anchor, positive, negative)
combination), which is deterministic and cheap at the batch sizes this
library targets.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import tensor as tt
from .tensor import NEG_MASK, Tensor

if TYPE_CHECKING:
    from .boost import ClusterStats

EPS = 1e-8


@dataclass
class MarginConfig:
    """Margin/offset hyperparameters for the distance losses."""

    contrast_pos_margin: float = 0.0
    contrast_neg_margin: float = 1.0
    triplet_margin: float = 0.05
    magnet_alpha: float = 1.0

    def __post_init__(self):
        for name in ("contrast_pos_margin", "contrast_neg_margin", "triplet_margin",
                     "magnet_alpha"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


class Batch:
    """A latent matrix plus integer class labels.

    ``latents`` may be a tape-tracked tensor (training) or a plain array
    (evaluation); labels must be one non-negative integer per row.
    """

    def __init__(self, latents, labels):
        if not isinstance(latents, Tensor):
            latents = Tensor(latents)
        labels = np.asarray(labels, dtype=np.int64)
        if latents.data.ndim != 2:
            raise ValueError(f"latents must be 2-D, got shape {latents.shape}")
        if labels.ndim != 1 or labels.shape[0] != latents.shape[0]:
            raise ValueError("label count must equal latent row count")
        if labels.size and labels.min() < 0:
            raise ValueError("labels must be non-negative")
        self.latents = latents
        self.labels = labels

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    def num_classes(self) -> int:
        return int(np.unique(self.labels).size)


def _same_matrix(labels: np.ndarray) -> np.ndarray:
    return labels[:, None] == labels[None, :]


def contrastive_loss(batch: Batch, cfg: MarginConfig) -> Tensor:
    """Pairwise pull/push loss over all unordered pairs.

    Similar pairs contribute max(0, d - pos_margin)^2 (plain d^2 at the
    default pos_margin of 0), dissimilar pairs max(0, neg_margin - d)^2,
    averaged with the 1/(2 * n_pairs) convention.
    """
    n = batch.n
    if n < 2:
        raise ValueError("empty pair set")
    same = _same_matrix(batch.labels)
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    pos_mask = Tensor((same & upper).astype(np.float64))
    neg_mask = Tensor((~same & upper).astype(np.float64))
    n_pairs = n * (n - 1) // 2

    d = tt.sqrt(tt.cross_sqdist(batch.latents, batch.latents))
    pos_hinge = tt.relu(d - cfg.contrast_pos_margin)
    neg_hinge = tt.relu(cfg.contrast_neg_margin - d)
    total = (pos_hinge * pos_hinge * pos_mask + neg_hinge * neg_hinge * neg_mask).sum()
    return total * (1.0 / (2.0 * n_pairs))


def triplet_loss(batch: Batch, cfg: MarginConfig) -> Tensor:
    """Hinge over all (anchor, positive, negative) triplets:
    mean of max(0, d(a,p) - d(a,n) + margin)."""
    n = batch.n
    same = _same_matrix(batch.labels)
    pos_pair = same & ~np.eye(n, dtype=bool)        # (a, p), a != p, same class
    mask3 = pos_pair[:, :, None] & ~same[:, None, :]  # and (a, n) different class
    count = int(mask3.sum())
    if count == 0:
        raise ValueError("no triplets")

    d = tt.sqrt(tt.cross_sqdist(batch.latents, batch.latents))
    d_ap = tt.reshape(d, (n, n, 1))
    d_an = tt.reshape(d, (n, 1, n))
    hinge = tt.relu(d_ap - d_an + cfg.triplet_margin)
    total = (hinge * Tensor(mask3.astype(np.float64))).sum()
    return total * (1.0 / count)


def _npair_positives(labels: np.ndarray) -> np.ndarray:
    """Index of each anchor's positive: the same-class sample at the nearest
    row index (ties to the smaller index); -1 when the anchor has none."""
    n = labels.shape[0]
    pos = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        best = -1
        best_key = None
        for j in range(n):
            if j == i or labels[j] != labels[i]:
                continue
            key = (abs(j - i), j)
            if best_key is None or key < best_key:
                best, best_key = j, key
        pos[i] = best
    return pos


def npair_loss(batch: Batch) -> Tensor:
    """Each sample as anchor against all other-class samples at once:
    mean over anchors of log(1 + sum_neg exp(f.f_neg - f.f_pos))."""
    n = batch.n
    pos = _npair_positives(batch.labels)
    valid = pos >= 0
    n_valid = int(valid.sum())
    if n_valid == 0:
        raise ValueError("no anchor has a positive")

    same = _same_matrix(batch.labels)
    pos_mask = np.zeros((n, n))
    pos_mask[valid, pos[valid]] = 1.0
    rival_add = np.where(same, NEG_MASK, 0.0)  # negatives: other-class samples
    valid_mask = valid.astype(np.float64)

    gram = tt.matmul(batch.latents, tt.transpose(batch.latents))
    f_pos = (gram * Tensor(pos_mask)).sum(axis=1)
    exponents = gram - tt.reshape(f_pos, (n, 1))
    lse_riv = tt.logsumexp(exponents + Tensor(rival_add), axis=1)
    per_anchor = tt.logaddexp(lse_riv, 0.0)  # log(1 + sum) even with zero rivals
    total = (per_anchor * Tensor(valid_mask)).sum()
    return total * (1.0 / n_valid)


def magnet_loss(batch: Batch, cfg: MarginConfig, stats: "ClusterStats") -> Tensor:
    """Cluster-affinity loss: mean over samples of
    -log( exp(-||r - mu_own||^2 / 2s2 - alpha) / sum_rivals exp(-||r - mu_c||^2 / 2s2) )
    with the pooled within-cluster variance s2, computed in the log domain.
    """
    if stats.class_ids.size < 2:
        raise ValueError("denominator empty")
    s2 = stats.pooled_variance
    if s2 < EPS:
        warnings.warn("pooled variance clamped to eps", RuntimeWarning)
        s2 = EPS

    row_of = {c: k for k, c in enumerate(stats.class_ids)}
    own_col = np.array([row_of[c] for c in batch.labels])
    k = stats.class_ids.size
    onehot = np.zeros((batch.n, k))
    onehot[np.arange(batch.n), own_col] = 1.0
    rival_add = np.where(onehot > 0, NEG_MASK, 0.0)

    d2 = tt.cross_sqdist(batch.latents, Tensor(stats.centroids))
    exponents = d2 * (-1.0 / (2.0 * s2))
    own = (exponents * Tensor(onehot)).sum(axis=1)
    lse_riv = tt.logsumexp(exponents + Tensor(rival_add), axis=1)
    # -log(num/den) == lse_riv - (own - alpha)
    return (lse_riv - own + cfg.magnet_alpha).mean()


def cross_entropy(logits, labels) -> Tensor:
    """Mean softmax cross-entropy from logits (log-sum-exp stabilized)."""
    logits = logits if isinstance(logits, Tensor) else Tensor(logits)
    if logits.data.ndim != 2 or logits.shape[1] < 2:
        raise ValueError("logits must be N x C with C >= 2")
    return tt.softmax_cross_entropy(logits, labels).mean()


def weighted_total(dist: Tensor, ce: Tensor, lam: float) -> Tensor:
    """lam * dist + (1 - lam) * ce; both terms stay in the gradient graph."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    return dist * lam + ce * (1.0 - lam)
