"""Batch PCA compression, per-cluster statistics, the dynamic alpha/beta
schedules, and the composite cluster-shaping loss built on them.

The projection and all cluster statistics are treated as constants of the
loss: gradients flow only through each latent's image under the (fixed)
projection. Differentiating through the SVD is deliberately avoided - it is
ill-conditioned at repeated singular values and the statistics act as
per-batch targets, not trainable quantities.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import tensor as tt
from .losses import Batch
from .tensor import NEG_MASK, Tensor

EPS = 1e-8  # stability constant: log-argument guard and beta floor


@dataclass
class PcaProjection:
    """Top principal directions of one batch of latents.

    ``components`` holds the selected_dim retained directions (rows,
    orthonormal); ``singular_values`` keeps the full non-increasing spectrum
    so explained-variance ratios stay inspectable after truncation.
    """

    components: np.ndarray      # (selected_dim, d)
    singular_values: np.ndarray  # (max_dim,)
    selected_dim: int
    threshold: float
    mean_vector: np.ndarray     # (d,)

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        sq = self.singular_values ** 2
        total = sq.sum()
        if total <= 0.0:
            return np.zeros_like(sq)
        return sq / total


def fit_pca(latents: np.ndarray, threshold: float = 0.95) -> PcaProjection:
    """Center, decompose, and pick the smallest dimension whose cumulative
    explained-variance ratio reaches ``threshold`` (all of them if none does).
    """
    latents = np.asarray(latents, dtype=np.float64)
    if latents.ndim != 2 or latents.shape[0] < 2:
        raise ValueError("fit_pca needs an N x d matrix with N >= 2")
    if not np.all(np.isfinite(latents)):
        raise ValueError("fit_pca: non-finite latents")
    mean = latents.mean(axis=0)
    centered = latents - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)

    sq = s ** 2
    total = sq.sum()
    max_dim = s.size
    if total <= 0.0:
        warnings.warn("fit_pca: zero-variance batch, keeping one component",
                      RuntimeWarning)
        dim = 1
    else:
        cum = np.cumsum(sq) / total
        hits = np.nonzero(cum >= threshold)[0]
        dim = int(hits[0]) + 1 if hits.size else max_dim
    return PcaProjection(components=vt[:dim].copy(), singular_values=s,
                         selected_dim=dim, threshold=threshold, mean_vector=mean)


def project(p: PcaProjection, vectors):
    """Map vectors into the retained subspace: (v - mean) @ components.T.

    Accepts a plain array (returns an array) or a tape-tracked tensor, in
    which case the projection participates in the graph as a constant map so
    gradients flow back to the inputs.
    """
    if isinstance(vectors, Tensor):
        if vectors.data.ndim != 2 or vectors.shape[1] != p.mean_vector.shape[0]:
            raise ValueError(f"project: expected N x {p.mean_vector.shape[0]}, "
                             f"got {vectors.shape}")
        return tt.matmul(vectors - Tensor(p.mean_vector), Tensor(p.components.T))
    arr = np.asarray(vectors, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.shape[1] != p.mean_vector.shape[0]:
        raise ValueError(f"project: expected vectors of length "
                         f"{p.mean_vector.shape[0]}, got {arr.shape[1]}")
    out = (arr - p.mean_vector) @ p.components.T
    return out[0] if single else out


def cluster_variance(points: np.ndarray, centroid: np.ndarray,
                     singleton_fallback: float | None = None) -> float:
    """Average squared distance to the centroid with the (|C| - 1) divisor.

    Singleton clusters have no within-spread to measure; they take
    ``singleton_fallback`` (flagged by a warning) when provided.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[0] == 0:
        raise ValueError("empty cluster")
    if points.shape[0] == 1:
        if singleton_fallback is None:
            raise ValueError("singleton cluster and no fallback variance")
        warnings.warn("singleton cluster: using pooled fallback variance",
                      RuntimeWarning)
        return float(singleton_fallback)
    diffs = points - np.asarray(centroid, dtype=np.float64)
    return float((diffs * diffs).sum() / (points.shape[0] - 1))


@dataclass
class ClusterStats:
    """Per-class centroids, variances, and counts for one batch."""

    class_ids: np.ndarray   # (K,) sorted distinct labels
    centroids: np.ndarray   # (K, d)
    variances: np.ndarray   # (K,)
    counts: np.ndarray      # (K,)
    pooled_variance: float  # sum_n ||r_n - mu(r_n)||^2 / (N - 1)


def compute_cluster_stats(points: np.ndarray, labels) -> ClusterStats:
    """Centroid, per-cluster variance, and pooled variance for each class
    present in the batch. Singletons inherit the pooled variance."""
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if n < 2:
        raise ValueError("need at least 2 samples for cluster statistics")
    class_ids = np.unique(labels)
    k = class_ids.size
    centroids = np.zeros((k, points.shape[1]))
    counts = np.zeros(k, dtype=np.int64)
    sum_sq = 0.0
    for idx, c in enumerate(class_ids):
        members = points[labels == c]
        counts[idx] = members.shape[0]
        centroids[idx] = members.mean(axis=0)
        d = members - centroids[idx]
        sum_sq += float((d * d).sum())
    pooled = sum_sq / (n - 1)
    variances = np.zeros(k)
    for idx, c in enumerate(class_ids):
        members = points[labels == c]
        variances[idx] = cluster_variance(members, centroids[idx],
                                          singleton_fallback=pooled)
    return ClusterStats(class_ids=class_ids, centroids=centroids,
                        variances=variances, counts=counts,
                        pooled_variance=pooled)


@dataclass
class ScheduleState:
    """Inputs of the epoch-dependent compactness/separation weights."""

    alpha0: float = 1.0
    beta0: float = 1.0
    epsilon: float = EPS
    epoch: int = 0
    total_epochs: int = 1

    def __post_init__(self):
        if self.epoch < 0 or self.total_epochs < 1 or self.epsilon <= 0:
            raise ValueError("invalid schedule state")


def alpha_schedule(s: ScheduleState) -> float:
    """Exponential decay from 1 + alpha0 toward 1."""
    return 1.0 + s.alpha0 * math.exp(-s.epoch / (1.05 * s.total_epochs))


def beta_schedule(s: ScheduleState) -> float:
    """Linear decay from beta0, floored at epsilon once 20% of the training
    horizon has passed."""
    return max(s.beta0 * (1.0 - s.epoch / (0.2 * s.total_epochs)), s.epsilon)


def latent_boost_loss(batch: Batch, proj: PcaProjection, stats: ClusterStats,
                      alpha: float, beta: float, eps: float = EPS) -> Tensor:
    """Cluster-affinity loss in the compressed space with per-cluster
    variances, the separation weight ``beta`` on every rival exponent, and
    ``eps`` added to the ratio inside the log.

    ``stats`` must be computed from the projected latents; centroids and
    variances are constants of the graph. Evaluated in the log domain:
    -log(exp(z) + eps) with z = (own exponent - alpha) - logsumexp(rivals).
    """
    if stats.class_ids.size < 2:
        raise ValueError("denominator empty")
    variances = stats.variances.copy()
    low = variances < EPS
    if low.any():
        warnings.warn("cluster variance clamped to eps", RuntimeWarning)
        variances[low] = EPS

    row_of = {c: k for k, c in enumerate(stats.class_ids)}
    own_col = np.array([row_of[c] for c in batch.labels])
    k = stats.class_ids.size
    onehot = np.zeros((batch.n, k))
    onehot[np.arange(batch.n), own_col] = 1.0
    rival_add = np.where(onehot > 0, NEG_MASK, 0.0)

    projected = project(proj, batch.latents)
    d2 = tt.cross_sqdist(projected, Tensor(stats.centroids))
    exponents = d2 * Tensor(-1.0 / (2.0 * variances))  # per-cluster scaling
    own = (exponents * Tensor(onehot)).sum(axis=1)
    lse_riv = tt.logsumexp(exponents * beta + Tensor(rival_add), axis=1)
    z = own - alpha - lse_riv
    if eps == 0.0:
        return (-z).mean()
    return (-tt.logaddexp(z, math.log(eps))).mean()
