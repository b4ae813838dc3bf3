"""Random forest of CART trees grown from scratch, plus KNN and single-tree baselines.

Trees are stored as flat arrays (one entry per node). A node with
``left == -1`` is a leaf; its class histogram is kept in ``counts``. Rows with
``x[feature] <= threshold`` go left.

Every tree draws from its own child of ``SeedSequence(seed)``, so the forest
is identical whether trees are grown sequentially or on a thread pool.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import zipfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.spatial.distance import cdist

from . import kernels
from .domain import LABELS, Dataset, FeatureMode, FeatureVector, parse_label, parse_mode
from .errors import CorruptModel, DegenerateDataset, DimensionMismatch, VersionMismatch

MODEL_VERSION = "ecgarrhythmia-model/1"
N_CLASSES = len(LABELS)
KINDS = ("forest", "dtree", "knn")


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 200
    max_depth: int | None = None
    min_samples_leaf: int = 1
    features_per_split: int | None = None  # None -> ceil(sqrt(F))
    bootstrap: bool = True
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1 or None")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be >= 1")

    def mtry(self, n_features: int) -> int:
        m = self.features_per_split or math.ceil(math.sqrt(n_features))
        if m > n_features:
            raise ValueError(f"features_per_split={m} exceeds the {n_features} features")
        return m

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("n_jobs")  # execution detail, not part of the model
        return d


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray  # int, -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, n_classes)

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):  # children always follow their parent
            if self.left[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        active = self.left[node] >= 0
        while active.any():
            r, nd = rows[active], node[active]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.left[node] >= 0
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        c = self.counts[self.apply(X)].astype(float)
        return c / c.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class TrainedModel:
    kind: str
    mode: FeatureMode
    names: tuple
    params: dict
    fingerprint: str
    trees: tuple = ()
    oob_score: float | None = None
    meta: dict = field(default_factory=dict)  # feature-extraction settings, e.g. wavelet
    # knn state
    train_X: np.ndarray | None = field(default=None, repr=False)
    train_y: np.ndarray | None = field(default=None, repr=False)
    scale_mean: np.ndarray | None = field(default=None, repr=False)
    scale_std: np.ndarray | None = field(default=None, repr=False)

    classes = LABELS

    @property
    def n_features(self) -> int:
        return len(self.names)


# ---------------------------------------------------------------------------
# training


def _check_dataset(dataset: Dataset):
    if len(dataset) < 2:
        raise DegenerateDataset(f"need at least 2 rows, got {len(dataset)}")
    y = dataset.y
    if np.unique(y).size < 2:
        raise DegenerateDataset("need at least 2 classes")
    X = np.ascontiguousarray(dataset.X, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise DegenerateDataset("feature matrix contains non-finite values")
    return X, y.astype(np.intp)


def _fingerprint(X, y, params: dict, kind: str) -> str:
    h = hashlib.sha256()
    h.update(kind.encode())
    h.update(json.dumps(params, sort_keys=True).encode())
    h.update(np.ascontiguousarray(X).tobytes())
    h.update(np.ascontiguousarray(y, dtype=np.int64).tobytes())
    return h.hexdigest()[:16]


def grow_tree(X, y, rows, mtry, rng, max_depth=None, min_leaf=1) -> Tree:
    """Grow one CART tree on ``rows`` (repeats allowed) by Gini impurity."""
    n_feat = X.shape[1]
    feature, threshold, left, right, counts = [], [], [], [], []
    stack = [(np.asarray(rows, dtype=np.intp), 0, -1, False)]
    while stack:
        idx, depth, parent, is_right = stack.pop()
        node = len(feature)
        if parent >= 0:
            (right if is_right else left)[parent] = node
        hist = np.bincount(y[idx], minlength=N_CLASSES)
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        counts.append(hist)
        if (np.count_nonzero(hist) == 1 or idx.size < 2 * min_leaf
                or (max_depth is not None and depth >= max_depth)):
            continue
        order = rng.permutation(n_feat).astype(np.intp)
        f, thr, _ = kernels.best_split(X, y, idx, order, mtry, N_CLASSES, min_leaf)
        if f < 0:
            continue
        feature[node] = f
        threshold[node] = thr
        go_left = X[idx, f] <= thr
        # right pushed first so the left subtree is numbered first
        stack.append((idx[~go_left], depth + 1, node, True))
        stack.append((idx[go_left], depth + 1, node, False))
    return Tree(
        np.asarray(feature, dtype=np.intp), np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.intp), np.asarray(right, dtype=np.intp),
        np.asarray(counts, dtype=np.int64).reshape(-1, N_CLASSES),
    )


def train_forest(dataset: Dataset, params: ForestParams = ForestParams()) -> TrainedModel:
    """Bagged CART forest with out-of-bag accuracy."""
    X, y = _check_dataset(dataset)
    n, n_feat = X.shape
    mtry = params.mtry(n_feat)
    streams = np.random.SeedSequence(params.seed).spawn(params.n_trees)

    def one(ss):
        rng = np.random.default_rng(ss)
        rows = rng.integers(0, n, size=n) if params.bootstrap else np.arange(n)
        tree = grow_tree(X, y, rows, mtry, rng, params.max_depth, params.min_samples_leaf)
        return tree, rows

    if params.n_jobs > 1:
        with ThreadPoolExecutor(params.n_jobs) as pool:
            grown = list(pool.map(one, streams))
    else:
        grown = [one(ss) for ss in streams]

    oob = None
    if params.bootstrap:
        votes = np.zeros((n, N_CLASSES))
        seen = np.zeros(n, dtype=bool)
        for tree, rows in grown:
            out = np.ones(n, dtype=bool)
            out[rows] = False
            if out.any():
                votes[out] += tree.predict_proba(X[out])
                seen |= out
        if seen.any():
            oob = float(np.mean(np.argmax(votes[seen], axis=1) == y[seen]))

    pdict = params.to_dict()
    return TrainedModel(
        "forest", dataset.mode, dataset.names, pdict, _fingerprint(X, y, pdict, "forest"),
        tuple(t for t, _ in grown), oob,
    )


def train_baseline(dataset: Dataset, kind: str, params: ForestParams | int | None = None) -> TrainedModel:
    """``knn`` (z-scored Euclidean, ``params`` = k, default 5) or ``dtree`` (one full CART tree)."""
    X, y = _check_dataset(dataset)
    if kind == "dtree":
        p = params if isinstance(params, ForestParams) else ForestParams()
        p = ForestParams(1, p.max_depth, p.min_samples_leaf, X.shape[1], False, p.seed)
        model = train_forest(dataset, p)
        return TrainedModel("dtree", model.mode, model.names, model.params, model.fingerprint,
                            model.trees)
    if kind == "knn":
        k = 5 if params is None else int(params)
        if k < 1:
            raise ValueError("k must be >= 1")
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std[std == 0] = 1.0
        pdict = {"k": k}
        return TrainedModel(
            "knn", dataset.mode, dataset.names, pdict, _fingerprint(X, y, pdict, "knn"),
            train_X=(X - mean) / std, train_y=y, scale_mean=mean, scale_std=std,
        )
    raise ValueError(f"unknown classifier kind {kind!r}; choose from {KINDS}")


def train(dataset: Dataset, kind: str = "forest", params: ForestParams = ForestParams(),
          knn_k: int = 5, meta: dict | None = None) -> TrainedModel:
    if kind == "forest":
        model = train_forest(dataset, params)
    else:
        model = train_baseline(dataset, kind, knn_k if kind == "knn" else params)
    return replace(model, meta=dict(meta or {})) if meta else model


# ---------------------------------------------------------------------------
# prediction


def _as_matrix(model: TrainedModel, features) -> tuple[np.ndarray, bool]:
    if isinstance(features, Dataset):
        if features.names != tuple(model.names):
            raise DimensionMismatch("feature names differ from the model's")
        return np.ascontiguousarray(features.X, dtype=float), False
    if isinstance(features, FeatureVector):
        features = features.values
    X = np.asarray(features, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(f"model expects {model.n_features} features, got shape {X.shape}")
    return X, single


def predict_proba(model: TrainedModel, features) -> np.ndarray:
    """Class probabilities in :data:`LABELS` order, one row per input row."""
    X, single = _as_matrix(model, features)
    if model.kind == "knn":
        Z = (X - model.scale_mean) / model.scale_std
        k = min(model.params["k"], model.train_X.shape[0])
        d = cdist(Z, model.train_X)
        nearest = np.argsort(d, axis=1, kind="stable")[:, :k]
        proba = np.zeros((X.shape[0], N_CLASSES))
        for j in range(k):
            proba[np.arange(X.shape[0]), model.train_y[nearest[:, j]]] += 1.0 / k
    else:
        proba = np.zeros((X.shape[0], N_CLASSES))
        for tree in model.trees:
            proba += tree.predict_proba(X)
        proba /= len(model.trees)
    return proba[0] if single else proba


def predict(model: TrainedModel, features):
    """``(label, probabilities)``; lists of labels for 2-D input.

    ``argmax`` returns the first maximum, so ties go to the earlier class in
    :data:`LABELS`.
    """
    proba = predict_proba(model, features)
    if proba.ndim == 1:
        return LABELS[int(np.argmax(proba))], proba
    return [LABELS[i] for i in np.argmax(proba, axis=1)], proba


# ---------------------------------------------------------------------------
# persistence


def save_model(model: TrainedModel, path) -> None:
    """Write an ``.npz`` container: JSON header plus flat tree arrays."""
    header = {
        "version": MODEL_VERSION,
        "kind": model.kind,
        "mode": str(model.mode),
        "names": list(model.names),
        "classes": [str(c) for c in LABELS],
        "params": model.params,
        "fingerprint": model.fingerprint,
        "oob_score": model.oob_score,
        "n_trees": len(model.trees),
        "meta": model.meta,
    }
    arrays = {"header": np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)}
    if model.trees:
        sizes = np.array([t.n_nodes for t in model.trees], dtype=np.int64)
        arrays.update(
            sizes=sizes,
            feature=np.concatenate([t.feature for t in model.trees]).astype(np.int64),
            threshold=np.concatenate([t.threshold for t in model.trees]),
            left=np.concatenate([t.left for t in model.trees]).astype(np.int64),
            right=np.concatenate([t.right for t in model.trees]).astype(np.int64),
            counts=np.concatenate([t.counts for t in model.trees]),
        )
    if model.kind == "knn":
        arrays.update(train_X=model.train_X, train_y=model.train_y.astype(np.int64),
                      scale_mean=model.scale_mean, scale_std=model.scale_std)
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_model(path) -> TrainedModel:
    try:
        with np.load(path, allow_pickle=False) as z:
            data = {k: z[k] for k in z.files}
        header = json.loads(bytes(data["header"]).decode())
    except FileNotFoundError:
        raise
    except (zipfile.BadZipFile, ValueError, KeyError, EOFError, OSError, UnicodeDecodeError) as exc:
        raise CorruptModel(f"{path}: unreadable model file ({exc})") from exc
    version = header.get("version")
    if version != MODEL_VERSION:
        raise VersionMismatch(f"{path}: model version {version!r}, expected {MODEL_VERSION!r}")
    try:
        if [parse_label(c) for c in header["classes"]] != list(LABELS):
            raise CorruptModel(f"{path}: unexpected class order")
        trees = []
        if header["n_trees"]:
            bounds = np.concatenate([[0], np.cumsum(data["sizes"])])
            for a, b in zip(bounds[:-1], bounds[1:]):
                trees.append(Tree(
                    data["feature"][a:b].astype(np.intp), data["threshold"][a:b],
                    data["left"][a:b].astype(np.intp), data["right"][a:b].astype(np.intp),
                    data["counts"][a:b],
                ))
        knn = {}
        if header["kind"] == "knn":
            knn = dict(train_X=data["train_X"], train_y=data["train_y"].astype(np.intp),
                       scale_mean=data["scale_mean"], scale_std=data["scale_std"])
        model = TrainedModel(
            header["kind"], parse_mode(header["mode"]), tuple(header["names"]), header["params"],
            header["fingerprint"], tuple(trees), header["oob_score"], dict(header.get("meta", {})),
            **knn,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"{path}: inconsistent model contents ({exc})") from exc
    for t in model.trees:
        if t.feature.max(initial=-1) >= model.n_features or (t.counts.sum(axis=1) == 0).any():
            raise CorruptModel(f"{path}: tree arrays out of range")
    return model
