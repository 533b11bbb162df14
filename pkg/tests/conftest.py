"""Shared helpers for seeded random batch generation."""

import numpy as np
import pytest


def random_batch(rng, n_max=12, d_max=8, min_classes=2):
    """Random latents with labels guaranteeing at least ``min_classes``
    classes, each with at least 2 members where possible."""
    n = int(rng.integers(max(4, 2 * min_classes), n_max + 1))
    d = int(rng.integers(2, d_max + 1))
    k = int(rng.integers(min_classes, min(min_classes + 2, n // 2) + 1))
    labels = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
    labels = labels[rng.permutation(n)]
    x = rng.normal(0.0, 1.0, size=(n, d))
    return x, labels.astype(np.int64)


def separated_batch(rng, n_per=5, d=4, k=3, spread=0.5, separation=12.0):
    """Tight, well-separated class clusters (used where hinge kinks or
    vanishing cluster-affinity ratios must be kept away from)."""
    centers = rng.normal(0.0, 1.0, size=(k, d))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    centers *= separation
    xs, ys = [], []
    for c in range(k):
        xs.append(centers[c] + spread * rng.normal(size=(n_per, d)))
        ys.append(np.full(n_per, c))
    return np.concatenate(xs), np.concatenate(ys).astype(np.int64)


def hinge_margins_ok(x, labels, cfg, tol=1e-3) -> bool:
    """True when no pair/triplet hinge argument sits within ``tol`` of its
    max(0, .) kink, so central differences stay on one side."""
    n = len(labels)
    d = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(-1))
    same = labels[:, None] == labels[None, :]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if not same[i, j] and abs(cfg.contrast_neg_margin - d[i, j]) < tol:
                return False
            if same[i, j] and abs(d[i, j] - cfg.contrast_pos_margin) < tol:
                return False
            for k in range(n):
                if same[i, j] and not same[i, k]:
                    if abs(d[i, j] - d[i, k] + cfg.triplet_margin) < tol:
                        return False
    return True


def kink_free_batch(rng, cfg, n_max=10, d_max=6):
    while True:
        x, labels = random_batch(rng, n_max=n_max, d_max=d_max)
        if hinge_margins_ok(x, labels, cfg):
            return x, labels


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
