"""Class rebalancing in feature space.

Minority classes are grown with SMOTE, majority classes are cut down by a
uniform random draw without replacement, until every class holds the same
number of rows.

Each class gets its own random stream derived from ``(seed, class index)``,
so the result for one class does not depend on which other classes are
present or in what order they are processed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .domain import LABELS, Dataset, RhythmLabel, parse_label
from .errors import ClassTooSmall, MissingClass, TargetExceedsCount

DEFAULT_TARGET = 3451


@dataclass(frozen=True)
class BalanceConfig:
    target_per_class: int = DEFAULT_TARGET
    smote_k: int = 5
    seed: int = 0

    def __post_init__(self):
        if int(self.target_per_class) < 1:
            raise ValueError("target_per_class must be >= 1")
        if int(self.smote_k) < 1:
            raise ValueError("smote_k must be >= 1")
        if int(self.seed) < 0:
            raise ValueError("seed must be non-negative")


def _class_rng(seed: int, label: RhythmLabel, salt: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), label.index, salt])


def _rows_of(dataset: Dataset, label: RhythmLabel) -> np.ndarray:
    return np.flatnonzero(np.array([lab is label for lab in dataset.labels], dtype=bool))


def _neighbours(X: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` nearest other rows (Euclidean) for every row of ``X``."""
    tree = cKDTree(X)
    _, nn = tree.query(X, k=k + 1)
    nn = np.atleast_2d(nn)
    out = np.empty((X.shape[0], k), dtype=np.intp)
    for i, row in enumerate(nn):
        # with duplicate points the row itself need not come first
        others = row[row != i]
        out[i] = others[:k]
    return out


def smote_samples(X: np.ndarray, n_new: int, k: int, rng: np.random.Generator):
    """``n_new`` synthetic rows interpolated inside the point cloud ``X``.

    Returns ``(rows, parents, partners)`` so callers can audit every
    synthetic row against the segment it was drawn from.
    """
    n = X.shape[0]
    if n < 2:
        raise ClassTooSmall(f"SMOTE needs at least 2 rows, got {n}")
    k = min(k, n - 1)
    nn = _neighbours(X, k)
    parents = rng.integers(0, n, size=n_new)
    partners = nn[parents, rng.integers(0, k, size=n_new)]
    u = rng.random(n_new)[:, None]
    rows = X[parents] + u * (X[partners] - X[parents])
    return rows, parents, partners


def smote_oversample(dataset: Dataset, label, target: int, k: int = 5, seed: int = 0) -> Dataset:
    """Grow ``label`` to ``max(count, target)`` rows; originals are kept verbatim.

    Synthetic rows are appended after the existing rows and get ids of the
    form ``<parent id>~smote<n>``.
    """
    label = parse_label(label) if not isinstance(label, RhythmLabel) else label
    idx = _rows_of(dataset, label)
    if idx.size < 2:
        raise ClassTooSmall(f"class {label} has {idx.size} row(s); SMOTE needs at least 2")
    n_new = int(target) - idx.size
    if n_new <= 0:
        return dataset
    rows, parents, _ = smote_samples(dataset.X[idx], n_new, k, _class_rng(seed, label, 1))
    ids = [f"{dataset.ids[idx[p]]}~smote{i}" for i, p in enumerate(parents)]
    return Dataset(
        np.vstack([dataset.X, rows]), dataset.labels + [label] * n_new,
        dataset.mode, dataset.ids + ids, dataset.names,
    )


def random_undersample(dataset: Dataset, label, target: int, seed: int = 0) -> Dataset:
    """Keep a uniform random subset of exactly ``target`` rows of ``label``.

    Row order of the survivors is preserved.
    """
    label = parse_label(label) if not isinstance(label, RhythmLabel) else label
    idx = _rows_of(dataset, label)
    target = int(target)
    if target > idx.size:
        raise TargetExceedsCount(f"class {label} has {idx.size} rows, cannot keep {target}")
    if target == idx.size:
        return dataset
    keep = np.sort(_class_rng(seed, label, 2).choice(idx.size, size=target, replace=False))
    drop = np.setdiff1d(idx, idx[keep], assume_unique=True)
    mask = np.ones(len(dataset), dtype=bool)
    mask[drop] = False
    return dataset.subset(np.flatnonzero(mask))


def balance(dataset: Dataset, config: BalanceConfig = BalanceConfig(), labels=LABELS) -> Dataset:
    """Bring every class of ``labels`` to ``config.target_per_class`` rows.

    The output lists classes in ``labels`` order, original rows before
    synthetic ones.
    """
    counts = dataset.class_counts()
    missing = [str(lab) for lab in labels if counts.get(lab, 0) == 0]
    if missing:
        raise MissingClass(f"classes absent from the dataset: {', '.join(missing)}")
    target = int(config.target_per_class)
    parts = []
    for lab in labels:
        part = dataset.subset(_rows_of(dataset, lab))
        if counts[lab] > target:
            part = random_undersample(part, lab, target, config.seed)
        elif counts[lab] < target:
            part = smote_oversample(part, lab, target, config.smote_k, config.seed)
        parts.append(part)
    return Dataset(
        np.vstack([p.X for p in parts]),
        [lab for p in parts for lab in p.labels],
        dataset.mode,
        [i for p in parts for i in p.ids],
        dataset.names,
    )


def auto_target(dataset: Dataset, labels=LABELS) -> int:
    """Median class count, used when no explicit target is configured."""
    counts = dataset.class_counts()
    return int(round(float(np.median([counts[lab] for lab in labels]))))
