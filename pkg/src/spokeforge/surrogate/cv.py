from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from .model import fit_surrogate, r2_score


def kfold_indices(n: int, k: int, seed: int = 0) -> list[np.ndarray]:
    """Validation index blocks: contiguous chunks of a seeded permutation."""
    if k < 2 or n < k:
        raise DomainError(f"need 2 <= k <= n, got k={k}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(b) for b in np.array_split(perm, k)]


def expand_grid(grid) -> list[dict]:
    """Accept a list of parameter dicts or a dict of value lists."""
    if isinstance(grid, dict):
        keys = list(grid)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]
    return [dict(p) for p in grid]


@dataclass
class CvReport:
    family: str
    params: list[dict]
    fold_scores: list[list[float]]
    mean_scores: list[float]
    best_index: int

    @property
    def best_params(self) -> dict:
        return self.params[self.best_index]

    @property
    def best_score(self) -> float:
        return self.mean_scores[self.best_index]

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "params": self.params,
            "fold_scores": self.fold_scores,
            "mean_scores": self.mean_scores,
            "best_index": self.best_index,
            "best_params": self.best_params,
        }


def grid_search_cv(X, y, family: str, grid, k: int = 5, seed: int = 0) -> CvReport:
    """Score every grid point by mean validation R^2 over ``k`` folds.

    The scaler is refit inside every training fold. Folds whose validation
    targets have no variance (e.g. single-sample folds) score NaN and are
    skipped in the mean; if every fold is undefined the pooled out-of-fold
    R^2 is used instead.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    points = expand_grid(grid)
    if not points:
        raise DomainError("hyperparameter grid is empty")
    folds = kfold_indices(len(y), k, seed)
    fold_scores, means = [], []
    for params in points:
        scores = []
        oof = np.empty_like(y)
        for val in folds:
            train = np.setdiff1d(np.arange(len(y)), val)
            model = fit_surrogate(family, X[train], y[train], params)
            pred = model.predict(X[val])
            oof[val] = pred
            scores.append(r2_score(y[val], pred) if np.ptp(y[val]) > 0 else float("nan"))
        fold_scores.append(scores)
        defined = [s for s in scores if s == s]
        means.append(float(np.mean(defined)) if defined else r2_score(y, oof))
    best = int(np.argmax(means))  # first maximizer in grid order
    return CvReport(family, points, fold_scores, means, best)
