"""SMOTE oversampling of the fraud class."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DatasetError, LabeledDataset

MINORITY_LABEL = 1

# bytes of scratch memory allowed for one block of pairwise differences
_KNN_BLOCK_BYTES = 32 * 2**20


@dataclass(frozen=True)
class SmoteConfig:
    k: int = 5
    target_minority_count: int | None = None  # None: match the majority count
    seed: int = 0


def minority_knn(ds: LabeledDataset, k: int) -> np.ndarray:
    """k nearest minority neighbours of every minority row.

    Returns an ``(m, k)`` array of positions into the minority subset (in
    dataset order). Distances are exact Euclidean; ties go to the lower index.
    """
    return knn_table(ds.features[ds.labels == MINORITY_LABEL], k)


def knn_table(points: np.ndarray, k: int) -> np.ndarray:
    m, d = points.shape
    if k < 1:
        raise DatasetError(f"k must be >= 1, got {k}")
    if m < k + 1:
        raise DatasetError(f"need at least k+1={k + 1} minority rows, have {m}")
    block = max(1, _KNN_BLOCK_BYTES // max(1, m * d * 8))
    out = np.empty((m, k), dtype=np.int64)
    for start in range(0, m, block):
        stop = min(start + block, m)
        diff = points[start:stop, None, :] - points[None, :, :]
        dist = np.einsum("ijk,ijk->ij", diff, diff)
        dist[np.arange(stop - start), np.arange(start, stop)] = np.inf
        # stable sort keeps lower indices first among equal distances
        out[start:stop] = np.argsort(dist, axis=1, kind="stable")[:, :k]
    return out


def smote(ds: LabeledDataset, cfg: SmoteConfig) -> LabeledDataset:
    """Append synthetic fraud rows interpolated between fraud rows and their neighbours.

    Base rows are taken round-robin over the minority set; for each one a
    neighbour and a single interpolation weight in [0, 1] are drawn at random.
    Original rows come first, unchanged and in order.
    """
    minority = ds.features[ds.labels == MINORITY_LABEL]
    m = minority.shape[0]
    target = ds.class_counts()[0] if cfg.target_minority_count is None else cfg.target_minority_count
    if cfg.k < 1 or cfg.k > m - 1:
        raise DatasetError(f"k={cfg.k} invalid for {m} minority rows (need 1 <= k <= {m - 1})")
    if target < m:
        raise DatasetError(f"target minority count {target} is below the current {m}")
    n_new = target - m
    if n_new == 0:
        return ds

    neighbours = knn_table(minority, cfg.k)
    rng = np.random.default_rng(cfg.seed)
    base = np.arange(n_new) % m
    partner = neighbours[base, rng.integers(0, cfg.k, size=n_new)]
    lam = rng.random(n_new)[:, None]
    synthetic = minority[base] + lam * (minority[partner] - minority[base])
    return LabeledDataset(
        np.vstack([ds.features, synthetic]),
        np.concatenate([ds.labels, np.full(n_new, MINORITY_LABEL)]),
        ds.column_names,
    )


def balance(ds: LabeledDataset, k: int = 5, seed: int = 0) -> LabeledDataset:
    """Oversample fraud rows up to the normal-class count."""
    return smote(ds, SmoteConfig(k=k, target_minority_count=ds.class_counts()[0], seed=seed))
