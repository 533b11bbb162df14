"""Dataset generation and loading: seeded Gaussian blobs for desk-scale
experiments and the big-endian IDX image/label container for real digits."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """Malformed IDX container (magic, payload size, or count mismatch)."""


@dataclass
class DatasetSplit:
    """Disjoint train/validation/test features and labels.

    Validation drives stopping and scheduling only; the test block is
    reserved for final metrics.
    """

    train_x: np.ndarray
    train_y: np.ndarray
    val_x: np.ndarray
    val_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    num_classes: int

    def __post_init__(self):
        for x, y in ((self.train_x, self.train_y), (self.val_x, self.val_y),
                     (self.test_x, self.test_y)):
            if x.shape[0] != y.shape[0]:
                raise ValueError("feature/label count mismatch in split")
            if y.size and (y.min() < 0 or y.max() >= self.num_classes):
                raise ValueError("label out of range in split")

    @property
    def dim(self) -> int:
        return self.train_x.shape[1]


@dataclass
class SyntheticBlobSpec:
    """Isotropic Gaussian clusters around fixed per-class means."""

    means: np.ndarray        # (num_classes, dim)
    stddev: float
    samples_per_class: int
    seed: int

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64)
        if self.means.ndim != 2 or self.means.shape[0] < 2:
            raise ValueError("need mean vectors for at least 2 classes")
        if self.stddev <= 0 or self.samples_per_class < 1:
            raise ValueError("degenerate blob spec")

    @property
    def num_classes(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


def random_blob_means(num_classes: int, dim: int, separation: float,
                      seed: int) -> np.ndarray:
    """Seeded class means: random unit directions scaled to ``separation``."""
    rng = np.random.default_rng([seed, 101])
    dirs = rng.standard_normal((num_classes, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs * separation


def _stratified_split(xs, ys, seed: int,
                      fractions=(0.70, 0.15, 0.15)) -> tuple:
    rng = np.random.default_rng([seed, 202])
    tr_x, tr_y, va_x, va_y, te_x, te_y = [], [], [], [], [], []
    for c in np.unique(ys):
        idx = np.nonzero(ys == c)[0]
        idx = idx[rng.permutation(idx.size)]
        n = idx.size
        n_tr = int(round(fractions[0] * n))
        n_va = int(round(fractions[1] * n))
        tr_x.append(xs[idx[:n_tr]]); tr_y.append(ys[idx[:n_tr]])
        va_x.append(xs[idx[n_tr:n_tr + n_va]]); va_y.append(ys[idx[n_tr:n_tr + n_va]])
        te_x.append(xs[idx[n_tr + n_va:]]); te_y.append(ys[idx[n_tr + n_va:]])
    cat = lambda parts: np.concatenate(parts, axis=0)
    return cat(tr_x), cat(tr_y), cat(va_x), cat(va_y), cat(te_x), cat(te_y)


def generate_blobs(spec: SyntheticBlobSpec) -> DatasetSplit:
    """Sample the blobs and split them 70/15/15 per class, all seeded."""
    rng = np.random.default_rng([spec.seed, 0])
    xs, ys = [], []
    for c in range(spec.num_classes):
        pts = spec.means[c] + spec.stddev * rng.standard_normal(
            (spec.samples_per_class, spec.dim))
        xs.append(pts)
        ys.append(np.full(spec.samples_per_class, c, dtype=np.int64))
    xs = np.concatenate(xs, axis=0)
    ys = np.concatenate(ys, axis=0)
    parts = _stratified_split(xs, ys, spec.seed)
    return DatasetSplit(*parts, num_classes=spec.num_classes)


def _read_be32(buf: bytes, offset: int) -> int:
    return struct.unpack_from(">I", buf, offset)[0]


def read_idx_images(path) -> np.ndarray:
    """Images from an IDX file as float rows scaled to [0, 1]."""
    with open(path, "rb") as f:
        buf = f.read()
    if len(buf) < 16:
        raise IdxFormatError(f"{path}: truncated header")
    if _read_be32(buf, 0) != IDX_IMAGE_MAGIC:
        raise IdxFormatError(f"{path}: bad magic")
    count, rows, cols = (_read_be32(buf, 4), _read_be32(buf, 8), _read_be32(buf, 12))
    expected = 16 + count * rows * cols
    if len(buf) != expected:
        raise IdxFormatError(f"{path}: truncated payload "
                             f"(expected {expected} bytes, got {len(buf)})")
    pixels = np.frombuffer(buf, dtype=np.uint8, offset=16)
    return pixels.reshape(count, rows * cols).astype(np.float64) / 255.0


def read_idx_labels(path) -> np.ndarray:
    with open(path, "rb") as f:
        buf = f.read()
    if len(buf) < 8:
        raise IdxFormatError(f"{path}: truncated header")
    if _read_be32(buf, 0) != IDX_LABEL_MAGIC:
        raise IdxFormatError(f"{path}: bad magic")
    count = _read_be32(buf, 4)
    if len(buf) != 8 + count:
        raise IdxFormatError(f"{path}: truncated payload")
    return np.frombuffer(buf, dtype=np.uint8, offset=8).astype(np.int64)


def load_idx(images_path, labels_path, seed: int = 0) -> DatasetSplit:
    """Load an IDX image/label pair and split it 70/15/15 per class.

    The container itself carries no split, so the same seeded stratified
    policy as the synthetic data applies.
    """
    xs = read_idx_images(images_path)
    ys = read_idx_labels(labels_path)
    if xs.shape[0] != ys.shape[0]:
        raise IdxFormatError(
            f"count mismatch: {xs.shape[0]} images vs {ys.shape[0]} labels")
    parts = _stratified_split(xs, ys, seed)
    return DatasetSplit(*parts, num_classes=int(ys.max()) + 1)
