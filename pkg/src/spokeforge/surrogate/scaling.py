from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DomainError


@dataclass(frozen=True, eq=False)
class Scaler:
    """Per-feature standardization with population standard deviation."""

    mean: np.ndarray
    std: np.ndarray

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != len(self.mean):
            raise DomainError(f"expected {len(self.mean)} features, got {X.shape[-1]}")
        return (X - self.mean) / self.std

    def inverse_transform(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=float) * self.std + self.mean


def scaler_fit(X, feature_names: Sequence[str] | None = None) -> Scaler:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DomainError("scaler needs a 2-D array with at least 2 rows")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    flat = np.flatnonzero(std <= 1e-12 * np.maximum(1.0, np.abs(mean)))
    if len(flat):
        names = [feature_names[j] if feature_names else f"column {j}" for j in flat]
        raise DomainError(f"constant feature(s) cannot be standardized: {', '.join(names)}")
    return Scaler(mean, std)


def scaler_apply(scaler: Scaler, X) -> np.ndarray:
    return scaler.transform(X)
