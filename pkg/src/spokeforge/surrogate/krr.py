from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ..errors import DomainError, NumericalError


def poly_kernel(U, V, gamma: float, degree: int) -> np.ndarray:
    """``(gamma * <u, v> + 1) ** degree`` for every row pair."""
    return (gamma * (np.asarray(U) @ np.asarray(V).T) + 1.0) ** degree


@dataclass(frozen=True, eq=False)
class KernelRidgeModel:
    alpha: float
    gamma: float
    degree: int
    weights: np.ndarray
    X_train: np.ndarray

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return poly_kernel(X, self.X_train, self.gamma, self.degree) @ self.weights


def krr_fit(X, y, alpha: float = 1e-3, gamma: float = 0.01, degree: int = 3) -> KernelRidgeModel:
    """Kernel ridge regression with a polynomial kernel, solved in dual form.

    The dual weights solve ``(K + alpha I) w = y`` through a Cholesky factorization.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] < 2:
        raise DomainError("krr_fit needs X of shape (n, d) with n >= 2 matching y")
    if alpha <= 0 or gamma <= 0 or int(degree) < 1:
        raise DomainError("alpha and gamma must be positive and degree >= 1")
    K = poly_kernel(X, X, gamma, int(degree))
    K[np.diag_indices_from(K)] += alpha
    try:
        w = cho_solve(cho_factor(K, lower=True, check_finite=True), y)
    except (LinAlgError, ValueError) as exc:
        raise NumericalError(f"kernel matrix factorization failed: {exc}") from None
    return KernelRidgeModel(float(alpha), float(gamma), int(degree), w, X.copy())
