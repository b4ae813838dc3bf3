"""Confusion counts, the four per-class metrics, stratified k-fold CV and the
ablation / grid-search drivers built on it.

Per class, with ``TP, TN, FP, FN`` counted one-vs-rest::

    Acc = (TP + TN) / (TP + TN + FP + FN)
    Se  = TP / (TP + FN)
    +P  = TP / (TP + FP)
    F1  = 2 TP / (2 TP + FP + FN)

All values are percentages. Macro averages are unweighted means over the
classes that occur in either truth or prediction; the headline accuracy is
``trace / total`` of the confusion matrix. A zero denominator gives 0 and a
flag instead of an exception.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .balance import BalanceConfig, auto_target, balance
from .classify import ForestParams, predict, train
from .domain import LABELS, Dataset
from .errors import ClassTooSmallForK, EmptyGrid, UnknownSubset

METRICS = ("Acc", "Se", "+P", "F1")

# name-prefix groups for feature-subset ablations
FEATURE_GROUPS = {
    "HRV": ("HR_",),
    "P": ("P_",),
    "PRI": ("PRI_",),
    "QRS": ("QRS_",),
    "D3": ("D3_",),
    "D4": ("D4_",),
    "D5": ("D5_",),
    "D6": ("D6_",),
    "D7": ("D7_",),
    "WAVELET": ("D3_", "D4_", "D5_", "D6_", "D7_"),
    "TIME": ("P_", "PRI_", "QRS_"),
}


@dataclass(frozen=True)
class ConfusionCounts:
    """``matrix[i, j]``: rows with true class ``labels[i]`` predicted as ``labels[j]``."""

    matrix: np.ndarray
    labels: tuple = LABELS

    @classmethod
    def from_predictions(cls, truth, predicted, labels=LABELS) -> "ConfusionCounts":
        pos = {lab: i for i, lab in enumerate(labels)}
        m = np.zeros((len(labels), len(labels)), dtype=np.int64)
        for t, p in zip(truth, predicted, strict=True):
            m[pos[t], pos[p]] += 1
        return cls(m, tuple(labels))

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        if self.labels != other.labels:
            raise ValueError("label sets differ")
        return ConfusionCounts(self.matrix + other.matrix, self.labels)

    @property
    def total(self) -> int:
        return int(self.matrix.sum())

    @property
    def tp(self) -> np.ndarray:
        return np.diag(self.matrix).copy()

    @property
    def fn(self) -> np.ndarray:
        return self.matrix.sum(axis=1) - self.tp

    @property
    def fp(self) -> np.ndarray:
        return self.matrix.sum(axis=0) - self.tp

    @property
    def tn(self) -> np.ndarray:
        return self.total - self.tp - self.fn - self.fp

    @property
    def active(self) -> np.ndarray:
        """Classes present in truth or prediction."""
        return (self.matrix.sum(axis=1) + self.matrix.sum(axis=0)) > 0


def _ratio(num, den, name, flags):
    if den == 0:
        flags.add(name)
        return 0.0
    return 100.0 * num / den


def class_metrics(tp: int, tn: int, fp: int, fn: int, flags: set | None = None) -> dict:
    """The four metrics (percent) for one class from its one-vs-rest counts."""
    flags = set() if flags is None else flags
    return {
        "Acc": _ratio(tp + tn, tp + tn + fp + fn, "zero_total", flags),
        "Se": _ratio(tp, tp + fn, "zero_se_denominator", flags),
        "+P": _ratio(tp, tp + fp, "zero_ppv_denominator", flags),
        "F1": _ratio(2 * tp, 2 * tp + fp + fn, "zero_f1_denominator", flags),
    }


@dataclass
class MetricReport:
    """Per-class and summary metrics, optionally with per-fold rows.

    ``summary`` holds ``Acc = trace/total`` and macro ``Se``, ``+P``, ``F1``.
    For a cross-validation report, ``folds`` holds the same summary per fold
    and ``average`` their mean (the usual table layout); ``per_class`` and
    ``summary`` then describe the pooled confusion matrix.
    """

    per_class: dict
    summary: dict
    macro_acc: float
    confusion: ConfusionCounts
    flags: set = field(default_factory=set)
    folds: list = field(default_factory=list)
    average: dict | None = None

    def headline(self) -> dict:
        return self.average if self.average is not None else self.summary

    def to_dict(self) -> dict:
        out = {
            "labels": [str(lab) for lab in self.confusion.labels],
            "per_class": {str(k): v for k, v in self.per_class.items()},
            "summary": self.summary,
            "macro_class_acc": self.macro_acc,
            "confusion": self.confusion.matrix.tolist(),
            "flags": sorted(self.flags),
        }
        if self.folds:
            out["folds"] = self.folds
            out["average"] = self.average
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def metrics(counts: ConfusionCounts) -> MetricReport:
    if counts.total <= 0:
        raise ValueError("confusion matrix is empty")
    flags: set = set()
    per_class = {}
    tp, tn, fp, fn = counts.tp, counts.tn, counts.fp, counts.fn
    for i, lab in enumerate(counts.labels):
        if counts.active[i]:
            per_class[lab] = class_metrics(int(tp[i]), int(tn[i]), int(fp[i]), int(fn[i]), flags)
    summary = {"Acc": 100.0 * float(np.trace(counts.matrix)) / counts.total}
    for name in ("Se", "+P", "F1"):
        summary[name] = float(np.mean([m[name] for m in per_class.values()]))
    macro_acc = float(np.mean([m["Acc"] for m in per_class.values()]))
    return MetricReport(per_class, summary, macro_acc, counts, flags)


def evaluate_predictions(truth, predicted, labels=LABELS) -> MetricReport:
    return metrics(ConfusionCounts.from_predictions(truth, predicted, labels))


# ---------------------------------------------------------------------------
# cross-validation


def stratified_folds(labels, k: int, seed: int) -> np.ndarray:
    """Fold number of every row.

    Rows of each class are shuffled and dealt round-robin; dealing continues
    across classes so fold sizes differ by at most one.
    """
    labels = list(labels)
    rng = np.random.default_rng(seed)
    order = []
    for lab in LABELS:
        idx = np.flatnonzero(np.array([x is lab for x in labels], dtype=bool))
        if idx.size == 0:
            continue
        if idx.size < k:
            raise ClassTooSmallForK(f"class {lab} has {idx.size} rows, fewer than k={k}")
        order.append(rng.permutation(idx))
    order = np.concatenate(order) if order else np.zeros(0, dtype=np.intp)
    folds = np.empty(len(labels), dtype=np.intp)
    folds[order] = np.arange(order.size) % k
    return folds


def kfold_crossval(dataset: Dataset, k: int = 10, params: ForestParams = ForestParams(),
                   seed: int = 0, classifier: str = "forest", knn_k: int = 5,
                   balance_train: BalanceConfig | None = None, n_jobs: int = 1) -> MetricReport:
    """Stratified k-fold CV; every fold retrains from scratch.

    ``balance_train`` rebalances the training part of each fold only (test
    folds keep their natural distribution). Fold ``i`` trains with a seed
    derived from ``(seed, i)``.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    folds = stratified_folds(dataset.labels, k, seed)
    fold_seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(k)]

    def run(i):
        test = np.flatnonzero(folds == i)
        train_part = dataset.subset(np.flatnonzero(folds != i))
        if balance_train is not None:
            train_part = balance(train_part, replace(balance_train, seed=fold_seeds[i]),
                                 labels=present_labels(train_part))
        model = train(train_part, classifier, replace(params, seed=fold_seeds[i]), knn_k)
        test_part = dataset.subset(test)
        pred, _ = predict(model, test_part)
        return ConfusionCounts.from_predictions(test_part.labels, pred)

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            confusions = list(pool.map(run, range(k)))
    else:
        confusions = [run(i) for i in range(k)]

    fold_rows = []
    flags: set = set()
    for i, cm in enumerate(confusions):
        rep = metrics(cm)
        flags |= rep.flags
        fold_rows.append({"fold": i + 1, **rep.summary})
    average = {m: float(np.mean([row[m] for row in fold_rows])) for m in METRICS}
    pooled = metrics(sum(confusions[1:], confusions[0]))
    pooled.folds = fold_rows
    pooled.average = average
    pooled.flags |= flags
    return pooled


def present_labels(dataset: Dataset) -> tuple:
    counts = dataset.class_counts()
    return tuple(lab for lab in LABELS if counts[lab] > 0)


def balanced_for_training(dataset: Dataset, config: BalanceConfig | None, seed: int = 0) -> Dataset:
    """Balance ``dataset`` over its present classes; ``config=None`` targets the median count."""
    labels = present_labels(dataset)
    if config is None:
        config = BalanceConfig(auto_target(dataset, labels), 5, seed)
    return balance(dataset, config, labels=labels)


# ---------------------------------------------------------------------------
# ablations


def subset_columns(names, subset: str) -> tuple:
    """Canonical-order names selected by ``subset`` (``ALL`` or groups joined by ``+``)."""
    names = tuple(names)
    key = subset.strip().upper()
    if key == "ALL":
        return names
    prefixes = []
    for part in key.split("+"):
        part = part.strip()
        if part == "ALL":
            return names
        if part not in FEATURE_GROUPS:
            raise UnknownSubset(f"unknown feature group {part!r}; known: ALL, {', '.join(FEATURE_GROUPS)}")
        prefixes.extend(FEATURE_GROUPS[part])
    cols = tuple(n for n in names if n.startswith(tuple(prefixes)))
    if not cols:
        raise UnknownSubset(f"subset {subset!r} selects no columns of this feature set")
    return cols


def _row(name, report: MetricReport, **extra) -> dict:
    return {"name": name, **extra, **report.headline()}


def ablation_feature_subsets(dataset: Dataset, subsets, k: int = 10,
                             params: ForestParams = ForestParams(), seed: int = 0,
                             **cv) -> list[dict]:
    """One row per subset with the CV averages of the four metrics."""
    rows = []
    for s in subsets:
        cols = subset_columns(dataset.names, s)
        rep = kfold_crossval(dataset.select_columns(cols), k, params, seed, **cv)
        rows.append(_row(s, rep, n_features=len(cols)))
    return rows


def compare_classifiers(dataset: Dataset, kinds=("knn", "dtree", "forest"), k: int = 10,
                        params: ForestParams = ForestParams(), seed: int = 0, knn_k: int = 5,
                        **cv) -> list[dict]:
    return [_row(kind, kfold_crossval(dataset, k, params, seed, kind, knn_k, **cv)) for kind in kinds]


def ablation_wavelets(records, wavelets, k: int = 10, params: ForestParams = ForestParams(),
                      seed: int = 0, balance_config: BalanceConfig | None = None,
                      **cv) -> list[dict]:
    """Re-extract the wavelet feature set per mother wavelet and cross-validate each."""
    from .pipeline import extract_dataset
    from .wavelet import get_wavelet

    specs = [get_wavelet(w) for w in wavelets]  # fail fast on unknown names
    rows = []
    for spec in specs:
        ds = extract_dataset(records, "wavelet66", wavelet=spec.name).dataset
        if balance_config is not None:
            ds = balance(ds, balance_config, labels=present_labels(ds))
        rows.append(_row(spec.name, kfold_crossval(ds, k, params, seed, **cv)))
    return rows


def grid_search(dataset: Dataset, grid: dict, k: int = 10,
                base: ForestParams = ForestParams(), seed: int = 0, **cv):
    """Exhaustive CV over ``grid`` (``{param name: [values]}``).

    The best setting maximises macro F1; ties go to fewer trees, then to the
    shallower depth (unlimited depth counts as deepest).
    """
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise EmptyGrid("parameter grid is empty")
    keys = sorted(grid)
    table = []
    best = None
    for values in itertools.product(*(grid[key] for key in keys)):
        params = replace(base, **dict(zip(keys, values)))
        rep = kfold_crossval(dataset, k, params, seed, **cv)
        row = {**dict(zip(keys, values)), **rep.headline()}
        table.append(row)
        depth = float("inf") if params.max_depth is None else params.max_depth
        rank = (-round(row["F1"], 9), params.n_trees, depth)
        if best is None or rank < best[0]:
            best = (rank, params)
    return best[1], table


# ---------------------------------------------------------------------------
# plots


def write_plots(report: MetricReport, out_dir) -> list:
    """Confusion-matrix heat map and per-class metric bars as PNG files."""
    from pathlib import Path

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = [str(lab) for lab in report.confusion.labels]

    fig, ax = plt.subplots(figsize=(6, 5))
    m = report.confusion.matrix
    ax.imshow(m, cmap="Blues")
    ax.set_xticks(range(len(names)), names, rotation=45)
    ax.set_yticks(range(len(names)), names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            ax.text(j, i, int(m[i, j]), ha="center", va="center", fontsize=7)
    fig.tight_layout()
    cm_path = out_dir / "confusion.png"
    fig.savefig(cm_path, dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(8, 4))
    classes = list(report.per_class)
    width = 0.2
    for j, name in enumerate(METRICS):
        vals = [report.per_class[c][name] for c in classes]
        ax.bar(np.arange(len(classes)) + (j - 1.5) * width, vals, width, label=name)
    ax.set_xticks(range(len(classes)), [str(c) for c in classes])
    ax.set_ylim(0, 100)
    ax.legend(ncol=4, fontsize=8)
    fig.tight_layout()
    bar_path = out_dir / "per_class.png"
    fig.savefig(bar_path, dpi=120)
    plt.close(fig)
    return [cm_path, bar_path]

