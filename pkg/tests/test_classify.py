import zipfile

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ecgarrhythmia.classify import (
    ForestParams,
    load_model,
    predict,
    predict_proba,
    save_model,
    train,
    train_baseline,
    train_forest,
)
from ecgarrhythmia.domain import LABELS, Dataset, RhythmLabel
from ecgarrhythmia.errors import CorruptModel, DegenerateDataset, DimensionMismatch, VersionMismatch
from ecgarrhythmia.pipeline import extract_dataset
from ecgarrhythmia.synthgen import make_corpus
from stubs import blobs

L = RhythmLabel


def two_blobs(n=400, seed=11, sep=10.0):
    rng = np.random.default_rng(seed)
    half = n // 2
    X = np.vstack([rng.standard_normal((half, 2)), rng.standard_normal((n - half, 2)) + [sep, 0.0]])
    labels = [L.NSR] * half + [L.SA] * (n - half)
    return Dataset(X, labels, "time48", names=("x0", "x1"))


@pytest.fixture(scope="module")
def blob9():
    return blobs(40, seed=11)


def test_oob_on_separated_blobs():
    model = train_forest(two_blobs(), ForestParams(n_trees=100, seed=11))
    assert model.oob_score >= 0.99


def test_memorises_training_rows(blob9):
    model = train_forest(blob9, ForestParams(n_trees=25, bootstrap=False, seed=1))
    labels, _ = predict(model, blob9)
    assert labels == blob9.labels
    knn = train_baseline(blob9, "knn", 1)
    assert predict(knn, blob9)[0] == blob9.labels


def test_all_classifiers_on_separable_blobs(blob9):
    fresh = blobs(40, seed=11)
    rng = np.random.default_rng(99)
    X = fresh.X + 0.3 * rng.standard_normal(fresh.X.shape)
    probe = Dataset(X, fresh.labels, fresh.mode)
    for kind in ("forest", "dtree", "knn"):
        model = train(blob9, kind, ForestParams(n_trees=50, seed=2))
        pred = predict(model, probe)[0]
        assert np.mean([p is t for p, t in zip(pred, probe.labels)]) >= 0.95, kind


def test_probabilities(blob9):
    model = train_forest(blob9, ForestParams(n_trees=20, seed=3))
    probe = np.random.default_rng(0).standard_normal((50, 48))
    p = predict_proba(model, probe)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-9)
    assert np.all((p >= 0) & (p <= 1))
    label, single = predict(model, probe[0])
    assert single.shape == (9,) and label is LABELS[int(np.argmax(single))]


def test_single_tree_is_its_leaf_majority():
    ds = blobs(15, seed=8)
    model = train_forest(ds, ForestParams(n_trees=1, min_samples_leaf=5, seed=4))
    tree = model.trees[0]
    probe = np.random.default_rng(1).standard_normal((40, 48)) * 3
    leaves = tree.apply(probe)
    labels = predict(model, probe)[0]
    for leaf, lab in zip(leaves, labels):
        assert lab is LABELS[int(np.argmax(tree.counts[leaf]))]


def test_save_load_roundtrip(tmp_path, blob9):
    model = train(blob9, "forest", ForestParams(n_trees=15, seed=5), meta={"wavelet": None})
    path = tmp_path / "m.bin"
    save_model(model, path)
    again = load_model(path)
    probe = np.random.default_rng(2).standard_normal((100, 48)) * 2
    assert np.array_equal(predict_proba(model, probe), predict_proba(again, probe))
    for a, b in zip(model.trees, again.trees):
        assert np.array_equal(a.threshold, b.threshold, equal_nan=True)
    for kind in ("knn", "dtree"):
        m = train(blob9, kind, ForestParams(seed=1))
        save_model(m, path)
        assert np.array_equal(predict_proba(m, probe), predict_proba(load_model(path), probe))


def test_corrupt_and_foreign_files(tmp_path, blob9):
    model = train_forest(blob9, ForestParams(n_trees=3, seed=5))
    path = tmp_path / "m.bin"
    save_model(model, path)
    raw = path.read_bytes()
    (tmp_path / "cut.bin").write_bytes(raw[: len(raw) // 2])
    with pytest.raises(CorruptModel):
        load_model(tmp_path / "cut.bin")
    (tmp_path / "junk.bin").write_bytes(b"not a model")
    with pytest.raises(CorruptModel):
        load_model(tmp_path / "junk.bin")
    # same container, different version tag
    with zipfile.ZipFile(path) as z:
        members = {n: z.read(n) for n in z.namelist()}
    header = [n for n in members if n.startswith("header")][0]
    members[header] = members[header].replace(b"ecgarrhythmia-model/1", b"ecgarrhythmia-model/9")
    with zipfile.ZipFile(tmp_path / "v9.bin", "w") as z:
        for n, data in members.items():
            z.writestr(n, data)
    with pytest.raises(VersionMismatch):
        load_model(tmp_path / "v9.bin")


def test_preconditions(blob9):
    single = blob9.subset([i for i, lab in enumerate(blob9.labels) if lab is L.AF])
    with pytest.raises(DegenerateDataset):
        train_forest(single)
    with pytest.raises(DegenerateDataset):
        train_forest(blob9.subset([0]))
    bad = Dataset(blob9.X.copy(), blob9.labels, blob9.mode)
    bad.X[3, 4] = np.nan
    with pytest.raises(DegenerateDataset):
        train_forest(bad)
    model = train_forest(blob9, ForestParams(n_trees=2))
    with pytest.raises(DimensionMismatch):
        predict(model, np.zeros(47))
    with pytest.raises(ValueError):
        ForestParams(n_trees=0)


def test_determinism_and_parallel_growth(blob9):
    a = train_forest(blob9, ForestParams(n_trees=12, seed=9))
    b = train_forest(blob9, ForestParams(n_trees=12, seed=9, n_jobs=2))
    assert a.fingerprint == b.fingerprint and a.oob_score == b.oob_score
    for ta, tb in zip(a.trees, b.trees):
        assert np.array_equal(ta.feature, tb.feature)
        assert np.array_equal(ta.threshold, tb.threshold, equal_nan=True)
        assert np.array_equal(ta.counts, tb.counts)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 47), st.sampled_from(["cube", "exp", "affine"]), st.integers(0, 1000))
def test_monotone_transform_invariance(col, kind, seed):
    ds = blobs(10, seed=seed % 7)
    f = {"cube": lambda v: v ** 3 + v, "exp": np.exp, "affine": lambda v: 3.0 * v - 1.0}[kind]
    X2 = ds.X.copy()
    X2[:, col] = f(X2[:, col])
    ds2 = Dataset(X2, ds.labels, ds.mode)
    # without bootstrap every tree sees every row, so no row falls between midpoints
    params = ForestParams(n_trees=5, bootstrap=False, seed=seed)
    pa = predict_proba(train_forest(ds, params), ds)
    pb = predict_proba(train_forest(ds2, params), ds2)
    assert np.array_equal(pa, pb)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 5))
def test_duplicates_never_lower_own_probability(seed, n_dup):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 3, (30, 3)).astype(float)  # coarse grid, collisions likely
    y = [LABELS[i] for i in rng.integers(0, 3, 30)]
    ds = Dataset(X, y, "time48", names=("a", "b", "c"))
    i = int(rng.integers(30))
    before = predict_proba(train_baseline(ds, "dtree"), X[i])[y[i].index]
    ds2 = Dataset(np.vstack([X, np.repeat(X[i:i + 1], n_dup, axis=0)]), y + [y[i]] * n_dup,
                  "time48", names=("a", "b", "c"))
    after = predict_proba(train_baseline(ds2, "dtree"), X[i])[y[i].index]
    assert after >= before - 1e-12


def test_forest_beats_single_tree_on_held_out_corpus():
    train_set = extract_dataset(make_corpus(12, seed=21)).dataset
    test_set = extract_dataset(make_corpus(8, seed=22)).dataset

    def acc(kind):
        model = train(train_set, kind, ForestParams(n_trees=100, seed=3))
        pred = predict(model, test_set)[0]
        return np.mean([p is t for p, t in zip(pred, test_set.labels)])

    assert acc("forest") >= acc("dtree")
