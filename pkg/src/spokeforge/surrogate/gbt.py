"""Squared-error gradient boosting over depth-limited regression trees."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError

MIN_SAMPLES_LEAF = 2


@dataclass(frozen=True, eq=False)
class RegressionTree:
    """Flat binary tree. ``feature[k] == -1`` marks node ``k`` as a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def depth(self) -> int:
        def walk(k):
            if self.feature[k] < 0:
                return 0
            return 1 + max(walk(self.left[k]), walk(self.right[k]))

        return walk(0)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while np.any(active):
            k = node[active]
            go_left = X[active, self.feature[k]] <= self.threshold[k]
            node[active] = np.where(go_left, self.left[k], self.right[k])
            active = self.feature[node] >= 0
        return self.value[node]


def _best_split(X, r, order, mask, min_leaf):
    """Greedy variance-reduction split of the samples in ``mask``.

    Returns ``(gain, feature, threshold)`` or ``None``. Ties keep the first
    feature, then the lowest threshold.
    """
    n_node = int(mask.sum())
    if n_node < 2 * min_leaf:
        return None
    d = X.shape[1]
    sel = mask[order]
    node_order = order.T[sel.T].reshape(d, n_node).T
    xs = X[node_order, np.arange(d)]
    rs = r[node_order]
    csum = np.cumsum(rs, axis=0)
    total = csum[-1]
    n_left = np.arange(1, n_node)[:, None]
    s_left = csum[:-1]
    s_right = total - s_left
    gain = s_left**2 / n_left + s_right**2 / (n_node - n_left) - total**2 / n_node
    valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n_node - n_left >= min_leaf)
    gain = np.where(valid, gain, -np.inf)
    flat = gain.T.ravel()  # feature-major so argmax prefers the first feature
    best = int(np.argmax(flat))
    g = flat[best]
    sse = float(np.sum(rs[:, 0] ** 2))
    if not np.isfinite(g) or g <= 1e-12 * sse:
        return None
    j, i = divmod(best, n_node - 1)
    lo, hi = xs[i, j], xs[i + 1, j]
    thr = 0.5 * (lo + hi)
    if thr >= hi:
        thr = lo
    return float(g), int(j), float(thr)


def _leaf_value(r_node: np.ndarray, l1: float) -> float:
    s = float(np.sum(r_node))
    if l1 > 0:
        s = np.sign(s) * max(abs(s) - l1, 0.0)
    return s / len(r_node)


def fit_tree(X, r, max_depth: int, min_leaf: int = MIN_SAMPLES_LEAF, l1: float = 0.0, order=None) -> RegressionTree:
    X = np.asarray(X, dtype=float)
    r = np.asarray(r, dtype=float)
    if order is None:
        order = np.argsort(X, axis=0, kind="stable")
    feature, threshold, left, right, value = [], [], [], [], []

    def grow(mask, depth):
        k = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(_leaf_value(r[mask], l1))
        if depth >= max_depth:
            return k
        split = _best_split(X, r, order, mask, min_leaf)
        if split is None:
            return k
        _, j, thr = split
        goes_left = X[:, j] <= thr
        feature[k] = j
        threshold[k] = thr
        left[k] = grow(mask & goes_left, depth + 1)
        right[k] = grow(mask & ~goes_left, depth + 1)
        return k

    grow(np.ones(len(r), dtype=bool), 0)
    return RegressionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value),
    )


@dataclass(frozen=True, eq=False)
class BoostedTreeModel:
    learning_rate: float
    n_estimators: int
    max_depth: int
    base_prediction: float
    trees: tuple[RegressionTree, ...]
    l1: float = 0.0
    train_mse: tuple[float, ...] = field(default=())  # after 0, 1, ..., len(trees) rounds

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.full(len(X), self.base_prediction)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out


def gbt_fit(
    X,
    y,
    learning_rate: float = 0.05,
    n_estimators: int = 100,
    max_depth: int = 2,
    l1: float = 0.0,
    min_samples_leaf: int = MIN_SAMPLES_LEAF,
) -> BoostedTreeModel:
    """Boost ``n_estimators`` regression trees on squared-error residuals.

    Each round fits a tree to ``y - F`` and adds ``learning_rate`` times its
    output to ``F``. ``l1`` soft-thresholds leaf sums before averaging.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y) or len(y) < 2:
        raise DomainError("gbt_fit needs X of shape (n, d) with n >= 2 matching y")
    if not (0 < learning_rate <= 1) or n_estimators < 0 or max_depth < 1 or l1 < 0:
        raise DomainError("need 0 < learning_rate <= 1, n_estimators >= 0, max_depth >= 1, l1 >= 0")
    base = float(y[0]) if np.all(y == y[0]) else float(np.mean(y))
    order = np.argsort(X, axis=0, kind="stable")
    F = np.full(len(y), base)
    mse = [float(np.mean((y - F) ** 2))]
    trees = []
    for _ in range(n_estimators):
        tree = fit_tree(X, y - F, max_depth, min_samples_leaf, l1, order)
        F = F + learning_rate * tree.predict(X)
        trees.append(tree)
        mse.append(float(np.mean((y - F) ** 2)))
    return BoostedTreeModel(
        float(learning_rate), int(n_estimators), int(max_depth), base, tuple(trees), float(l1), tuple(mse)
    )
