"""Pure-NumPy versions of the compiled kernels (same signatures, same results)."""

import numpy as np


def _windows(x, m):
    return np.lib.stride_tricks.sliding_window_view(x, m)


def _chebyshev(w):
    d = np.zeros((w.shape[0], w.shape[0]))
    for k in range(w.shape[1]):
        np.maximum(d, np.abs(w[:, k][:, None] - w[:, k][None, :]), out=d)
    return d


def _phi(x, m, r):
    w = _windows(x, m)
    counts = (_chebyshev(w) <= r).sum(axis=1)
    return float(np.mean(np.log(counts / w.shape[0])))


def approx_entropy(x, m, r):
    x = np.asarray(x, dtype=float)
    return _phi(x, m, r) - _phi(x, m + 1, r)


def sample_entropy_counts(x, m, r):
    x = np.asarray(x, dtype=float)
    n_t = x.size - m
    w = _windows(x, m + 1)[:n_t]
    dm = _chebyshev(w[:, :m])
    upper = np.triu(np.ones((n_t, n_t), dtype=bool), k=1)
    match_m = (dm < r) & upper
    last = np.abs(w[:, m][:, None] - w[:, m][None, :]) < r
    return int((match_m & last).sum()), int(match_m.sum())


def best_split(X, y, idx, features, n_try, n_classes, min_leaf):
    n = idx.size
    yy = y[idx]
    onehot = np.zeros((n, n_classes), dtype=np.int64)
    onehot[np.arange(n), yy] = 1
    total = onehot.sum(axis=0)
    n_left = np.arange(1, n, dtype=np.int64)
    n_right = n - n_left
    size_ok = (n_left >= min_leaf) & (n_right >= min_leaf)
    best_f, best_thr, best_score = -1, np.nan, -np.inf
    tried = 0
    for f in features:
        if tried >= n_try:
            break
        v = X[idx, f]
        order = np.argsort(v, kind="stable")
        v = v[order]
        if v[0] == v[-1]:
            continue
        tried += 1
        left = np.cumsum(onehot[order], axis=0)[:-1]
        right = total - left
        score = (left ** 2).sum(axis=1) / n_left + (right ** 2).sum(axis=1) / n_right
        valid = size_ok & (v[:-1] != v[1:])
        if not valid.any():
            continue
        score = np.where(valid, score, -np.inf)
        i = int(np.argmax(score))
        if score[i] > best_score:
            best_score = float(score[i])
            best_f = int(f)
            thr = (v[i] + v[i + 1]) / 2.0
            if thr == v[i + 1]:
                thr = v[i]
            best_thr = float(thr)
    return best_f, best_thr, best_score
