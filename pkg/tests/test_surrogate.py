import json
import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spokeforge.errors import DatasetError, DomainError
from spokeforge.surrogate import (
    DEFAULT_MODEL_SPECS,
    expand_grid,
    fit_surrogate,
    fit_tree,
    gbt_fit,
    grid_search_cv,
    kfold_indices,
    krr_fit,
    load_model,
    poly_kernel,
    r2_score,
    save_model,
    scaler_fit,
)
from spokeforge.surrogate.model import SCHEMA, model_from_dict, model_to_dict


# ------------------------------------------------------------------ oracles


def naive_tree(X, r, max_depth, min_leaf=2):
    """Plain-loop regression tree returning a predict function."""

    def build(idx, depth):
        mean = float(np.mean(r[idx]))
        if depth >= max_depth or len(idx) < 2 * min_leaf:
            return mean
        sse0 = sum((r[i] - mean) ** 2 for i in idx)
        best = None
        for j in range(X.shape[1]):
            vals = sorted(set(X[idx, j]))
            for a, b in zip(vals[:-1], vals[1:]):
                thr = 0.5 * (a + b)
                L = [i for i in idx if X[i, j] <= thr]
                R = [i for i in idx if X[i, j] > thr]
                if len(L) < min_leaf or len(R) < min_leaf:
                    continue
                mL, mR = np.mean(r[L]), np.mean(r[R])
                sse = sum((r[i] - mL) ** 2 for i in L) + sum((r[i] - mR) ** 2 for i in R)
                gain = sse0 - sse
                if best is None or gain > best[0]:
                    best = (gain, j, thr, L, R)
        if best is None or best[0] <= 1e-12:
            return mean
        _, j, thr, L, R = best
        return (j, thr, build(L, depth + 1), build(R, depth + 1))

    root = build(list(range(len(r))), 0)

    def predict(x):
        node = root
        while isinstance(node, tuple):
            j, thr, lft, rgt = node
            node = lft if x[j] <= thr else rgt
        return node

    return lambda Z: np.array([predict(z) for z in Z])


# --------------------------------------------------------------------- KRR


def test_krr_three_point_matches_linear_solve():
    X = np.array([[0.0, 1.0], [1.0, -1.0], [2.0, 0.5]])
    y = np.array([1.0, -2.0, 0.5])
    m = krr_fit(X, y, alpha=0.1, gamma=0.5, degree=2)
    K = np.array([[(0.5 * (a @ b) + 1.0) ** 2 for b in X] for a in X])
    w = np.linalg.solve(K + 0.1 * np.eye(3), y)
    assert np.allclose(m.weights, w, atol=1e-10, rtol=0)
    q = np.array([[0.3, 0.3]])
    kq = np.array([(0.5 * (q[0] @ b) + 1.0) ** 2 for b in X])
    assert m.predict(q)[0] == pytest.approx(kq @ w, abs=1e-10)


def test_poly_kernel_is_symmetric_psd(rng):
    X = rng.normal(size=(12, 4))
    K = poly_kernel(X, X, 0.3, 3)
    assert np.allclose(K, K.T)
    assert np.linalg.eigvalsh(K).min() > -1e-8 * np.abs(K).max()


def test_krr_interpolates_with_small_ridge(rng):
    X = rng.normal(size=(15, 3))
    y = X[:, 0] ** 2 - X[:, 1] + 0.5 * X[:, 2] * X[:, 0]
    m = krr_fit(X, y, alpha=1e-8, gamma=0.5, degree=2)
    assert np.allclose(m.predict(X), y, atol=1e-5)


def test_krr_errors():
    with pytest.raises(DomainError):
        krr_fit(np.ones((3, 2)), np.ones(3), alpha=0.0)
    with pytest.raises(DomainError):
        krr_fit(np.ones((3, 2)), np.ones(4))


# --------------------------------------------------------------------- trees


def test_tree_matches_naive_oracle(rng):
    for depth in (1, 2, 3):
        X = rng.normal(size=(40, 4))
        r = np.sin(X[:, 0]) + X[:, 2] ** 2 + 0.1 * rng.normal(size=40)
        tree = fit_tree(X, r, depth)
        oracle = naive_tree(X, r, depth)
        Q = rng.normal(size=(60, 4))
        assert np.allclose(tree.predict(Q), oracle(Q), atol=1e-12)
        assert tree.depth <= depth


def test_boosting_matches_round_by_round_oracle(rng):
    X = rng.normal(size=(30, 3))
    y = X[:, 0] * X[:, 1] + np.abs(X[:, 2])
    model = gbt_fit(X, y, learning_rate=0.3, n_estimators=8, max_depth=2)
    F = np.full(len(y), y.mean())
    Q = rng.normal(size=(20, 3))
    G = np.full(len(Q), y.mean())
    for _ in range(8):
        tree = naive_tree(X, y - F, 2)
        F = F + 0.3 * tree(X)
        G = G + 0.3 * tree(Q)
    assert np.allclose(model.predict(Q), G, atol=1e-10)
    assert model.train_mse[-1] == pytest.approx(np.mean((y - F) ** 2), rel=1e-10)


def test_boosting_mse_non_increasing(rng):
    for _ in range(5):
        X = rng.normal(size=(60, 5))
        y = X @ rng.normal(size=5) + np.sin(3 * X[:, 0])
        mse = np.array(gbt_fit(X, y, 0.1, 50, 2).train_mse)
        assert len(mse) == 51
        assert np.all(np.diff(mse) <= 1e-12)


def test_boosting_edge_cases():
    X = np.arange(10.0)[:, None]
    m = gbt_fit(X, np.full(10, 3.0), 0.1, 5, 2)
    assert np.all(m.predict(X) == 3.0)
    tree = fit_tree(np.zeros((6, 1)), np.arange(6.0), 3)  # constant feature: no split
    assert tree.depth == 0
    with pytest.raises(DomainError):
        gbt_fit(X, np.ones(10), learning_rate=0.0)


def test_l1_shrinks_leaves(rng):
    X = rng.normal(size=(20, 2))
    r = rng.normal(size=20)
    plain, shrunk = fit_tree(X, r, 1), fit_tree(X, r, 1, l1=0.5)
    assert np.all(np.abs(shrunk.value) <= np.abs(plain.value) + 1e-15)


# ---------------------------------------------------------- scaling and metrics


def test_scaler_matches_population_moments(rng):
    X = rng.normal(3.0, 2.0, size=(25, 3))
    s = scaler_fit(X)
    for j in range(3):
        col = X[:, j].tolist()
        assert s.mean[j] == pytest.approx(statistics.fmean(col), rel=1e-13)
        assert s.std[j] == pytest.approx(statistics.pstdev(col), rel=1e-12)
    assert np.allclose(s.inverse_transform(s.transform(X)), X)
    with pytest.raises(DomainError, match="b"):
        scaler_fit(np.column_stack([X[:, 0], np.ones(25)]), ["a", "b"])


def test_r2_four_points():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    p = np.array([1.5, 2.0, 2.5, 4.0])
    # SS_res = 0.5, SS_tot = 5
    assert r2_score(y, p) == pytest.approx(0.9)
    assert r2_score(y, y) == 1.0
    with pytest.raises(DomainError):
        r2_score(np.ones(4), p)


# ------------------------------------------------------------ CV and models


@given(st.integers(2, 60), st.integers(2, 10), st.integers(0, 1000))
def test_kfold_partitions(n, k, seed):
    k = min(k, n)
    folds = kfold_indices(n, k, seed)
    assert len(folds) == k
    allidx = np.sort(np.concatenate(folds))
    assert np.array_equal(allidx, np.arange(n))
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    assert [f.tolist() for f in kfold_indices(n, k, seed)] == [f.tolist() for f in folds]


def test_expand_grid():
    pts = expand_grid({"a": [1, 2], "b": [3]})
    assert pts == [{"a": 1, "b": 3}, {"a": 2, "b": 3}]
    assert expand_grid([{"a": 1}]) == [{"a": 1}]


def test_grid_search_prefers_right_degree(rng):
    X = rng.normal(size=(60, 2))
    y = X[:, 0] ** 2 + X[:, 1] ** 2
    rep = grid_search_cv(X, y, "krr", {"alpha": [1e-4], "gamma": [0.5], "degree": [1, 2]}, k=5, seed=3)
    assert rep.best_params["degree"] == 2
    assert rep.best_score > 0.99
    assert len(rep.fold_scores) == 2 and len(rep.fold_scores[0]) == 5
    json.dumps(rep.to_dict())


def test_default_specs():
    assert DEFAULT_MODEL_SPECS["rft"] == ("krr", {"alpha": 1e-3, "gamma": 0.01, "degree": 3})
    assert DEFAULT_MODEL_SPECS["rfc"][1]["degree"] == 2
    assert DEFAULT_MODEL_SPECS["sedt"] == ("gbt", {"learning_rate": 0.2, "n_estimators": 150, "max_depth": 2})
    assert DEFAULT_MODEL_SPECS["sedc"][1]["learning_rate"] == 0.05
    assert DEFAULT_MODEL_SPECS["vib_rms"][1]["n_estimators"] == 150


@pytest.mark.parametrize("out", ["rft", "sedt"])
def test_model_file_round_trip(tmp_path, rng, out):
    X = rng.normal(size=(40, 19))
    y = X[:, 0] + X[:, 5] ** 2 + 10
    family, params = DEFAULT_MODEL_SPECS[out]
    m = fit_surrogate(family, X, y, params, out)
    save_model(m, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    Q = rng.normal(size=(10, 19))
    assert np.array_equal(back.predict(Q), m.predict(Q))
    assert json.loads((tmp_path / "m.json").read_text())["schema"] == SCHEMA
    d = model_to_dict(m)
    d["schema"] = "other/9"
    with pytest.raises(DatasetError):
        model_from_dict(d)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.floats(-100, 100), st.floats(0.1, 100))
def test_models_equivariant_to_feature_affine_maps(seed, shift, scale):
    # standardization makes predictions invariant to per-feature affine rescaling
    r = np.random.default_rng(seed)
    X = r.normal(size=(30, 3))
    y = X[:, 0] - 2 * X[:, 1] ** 2
    Q = r.normal(size=(5, 3))
    a = fit_surrogate("gbt", X, y, {"learning_rate": 0.1, "n_estimators": 20, "max_depth": 2})
    b = fit_surrogate("gbt", X * scale + shift, y, {"learning_rate": 0.1, "n_estimators": 20, "max_depth": 2})
    assert np.allclose(a.predict(Q), b.predict(Q * scale + shift), atol=1e-6)
