"""Trained surrogates: scaler plus estimator, R^2 scoring and model files."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DatasetError, DomainError
from .gbt import BoostedTreeModel, RegressionTree, gbt_fit
from .krr import KernelRidgeModel, krr_fit
from .scaling import Scaler, scaler_fit

SCHEMA = "spokeforge.surrogate/1"
FAMILIES = ("krr", "gbt")

# selected family and hyperparameters per output
DEFAULT_MODEL_SPECS = {
    "rft": ("krr", {"alpha": 0.001, "gamma": 0.01, "degree": 3}),
    "rfc": ("krr", {"alpha": 0.001, "gamma": 0.01, "degree": 2}),
    "sedt": ("gbt", {"learning_rate": 0.2, "n_estimators": 150, "max_depth": 2}),
    "sedc": ("gbt", {"learning_rate": 0.05, "n_estimators": 100, "max_depth": 2}),
    "vib_rms": ("gbt", {"learning_rate": 0.05, "n_estimators": 150, "max_depth": 2}),
}


@dataclass(frozen=True, eq=False)
class SurrogateModel:
    family: str
    params: dict
    scaler: Scaler
    estimator: KernelRidgeModel | BoostedTreeModel
    target: str = ""

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.estimator.predict(self.scaler.transform(X))


def fit_estimator(family: str, Z, y, params: dict):
    if family == "krr":
        return krr_fit(Z, y, **params)
    if family == "gbt":
        return gbt_fit(Z, y, **params)
    raise DomainError(f"unknown model family {family!r}; expected one of {FAMILIES}")


def fit_surrogate(family: str, X, y, params: dict, target: str = "", feature_names=None) -> SurrogateModel:
    """Standardize ``X`` and fit one estimator on the raw targets."""
    scaler = scaler_fit(X, feature_names)
    est = fit_estimator(family, scaler.transform(X), y, params)
    return SurrogateModel(family, dict(params), scaler, est, target)


def predict(model, X) -> np.ndarray:
    return model.predict(X)


def r2_score(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape:
        raise DomainError(f"shape mismatch {y_true.shape} vs {y_pred.shape}")
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        raise DomainError("R^2 is undefined for zero-variance targets")
    return 1.0 - float(np.sum((y_true - y_pred) ** 2)) / ss_tot


# ------------------------------------------------------------------ model files


def _tree_to_dict(t: RegressionTree) -> dict:
    return {
        "feature": t.feature.tolist(),
        "threshold": t.threshold.tolist(),
        "left": t.left.tolist(),
        "right": t.right.tolist(),
        "value": t.value.tolist(),
    }


def _tree_from_dict(d: dict) -> RegressionTree:
    return RegressionTree(
        np.array(d["feature"], dtype=np.int64),
        np.array(d["threshold"], dtype=float),
        np.array(d["left"], dtype=np.int64),
        np.array(d["right"], dtype=np.int64),
        np.array(d["value"], dtype=float),
    )


def model_to_dict(model: SurrogateModel) -> dict:
    est = model.estimator
    out = {
        "schema": SCHEMA,
        "family": model.family,
        "target": model.target,
        "params": model.params,
        "scaler": {"mean": model.scaler.mean.tolist(), "std": model.scaler.std.tolist()},
    }
    if isinstance(est, KernelRidgeModel):
        out["krr"] = {
            "alpha": est.alpha,
            "gamma": est.gamma,
            "degree": est.degree,
            "weights": est.weights.tolist(),
            "X_train": est.X_train.tolist(),
        }
    else:
        out["gbt"] = {
            "learning_rate": est.learning_rate,
            "n_estimators": est.n_estimators,
            "max_depth": est.max_depth,
            "base_prediction": est.base_prediction,
            "l1": est.l1,
            "train_mse": list(est.train_mse),
            "trees": [_tree_to_dict(t) for t in est.trees],
        }
    return out


def model_from_dict(d: dict) -> SurrogateModel:
    if d.get("schema") != SCHEMA:
        raise DatasetError(f"unsupported model schema {d.get('schema')!r}; expected {SCHEMA}")
    scaler = Scaler(np.array(d["scaler"]["mean"]), np.array(d["scaler"]["std"]))
    if d["family"] == "krr":
        k = d["krr"]
        est = KernelRidgeModel(k["alpha"], k["gamma"], k["degree"], np.array(k["weights"]), np.array(k["X_train"]))
    elif d["family"] == "gbt":
        g = d["gbt"]
        est = BoostedTreeModel(
            g["learning_rate"], g["n_estimators"], g["max_depth"], g["base_prediction"],
            tuple(_tree_from_dict(t) for t in g["trees"]), g["l1"], tuple(g["train_mse"]),
        )
    else:
        raise DatasetError(f"unknown model family {d['family']!r}")
    return SurrogateModel(d["family"], dict(d["params"]), scaler, est, d.get("target", ""))


def save_model(model: SurrogateModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def load_model(path) -> SurrogateModel:
    try:
        return model_from_dict(json.loads(Path(path).read_text()))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise DatasetError(f"{path}: malformed model file ({exc})") from None
