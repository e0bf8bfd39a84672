"""Gaussian-process regression with a squared-exponential kernel, and expected improvement."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular
from scipy.special import ndtr

from ..errors import DomainError, NumericalError

JITTER_FLOOR = 1e-8
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def se_kernel(A, B, length_scale: float, sigma_f: float) -> np.ndarray:
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    d2 = np.sum(A**2, 1)[:, None] + np.sum(B**2, 1)[None, :] - 2.0 * A @ B.T
    return sigma_f**2 * np.exp(-0.5 * np.maximum(d2, 0.0) / length_scale**2)


@dataclass(frozen=True, eq=False)
class GaussianSurrogate:
    X: np.ndarray
    y: np.ndarray
    length_scale: float
    sigma_f: float
    sigma_n: float
    chol: np.ndarray  # lower Cholesky factor of K + noise * I
    alpha: np.ndarray  # (K + noise * I)^-1 y

    def log_marginal_likelihood(self) -> float:
        n = len(self.y)
        return float(
            -0.5 * self.y @ self.alpha - np.sum(np.log(np.diag(self.chol))) - 0.5 * n * math.log(2 * math.pi)
        )


def gp_fit(X, y, length_scale: float, sigma_f: float, sigma_n: float) -> GaussianSurrogate:
    """Factorize ``K + sigma_n^2 I``; on failure retry once with ten times the noise."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(X) < 1 or len(X) != len(y):
        raise DomainError("gp_fit needs at least one observation and matching X, y")
    if length_scale <= 0 or sigma_f <= 0:
        raise DomainError("length scale and signal std must be positive")
    sigma_n = max(float(sigma_n), JITTER_FLOOR)
    K = se_kernel(X, X, length_scale, sigma_f)
    for noise in (sigma_n, sigma_n * math.sqrt(10.0)):
        try:
            c, _ = cho_factor(K + noise**2 * np.eye(len(X)), lower=True)
        except LinAlgError:
            continue
        L = np.tril(c)
        return GaussianSurrogate(X, y, float(length_scale), float(sigma_f), noise, L, cho_solve((L, True), y))
    raise NumericalError("GP kernel matrix is not positive definite even after adding jitter")


def gp_posterior(model: GaussianSurrogate, x) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and standard deviation of the latent function at ``x``."""
    Xq = np.atleast_2d(np.asarray(x, dtype=float))
    Ks = se_kernel(Xq, model.X, model.length_scale, model.sigma_f)
    mu = Ks @ model.alpha
    v = solve_triangular(model.chol, Ks.T, lower=True)
    var = model.sigma_f**2 - np.sum(v**2, axis=0)
    return mu, np.sqrt(np.maximum(var, 0.0))


def expected_improvement(mu, sigma, f_best):
    """EI for minimization; reduces to ``max(f_best - mu, 0)`` where ``sigma == 0``."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise DomainError("sigma must be non-negative")
    imp = f_best - mu
    safe = np.where(sigma > 0, sigma, 1.0)
    z = imp / safe
    ei = imp * ndtr(z) + sigma * _INV_SQRT_2PI * np.exp(-0.5 * z**2)
    ei = np.where(sigma > 0, ei, np.maximum(imp, 0.0))
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


def fit_by_marginal_likelihood(X, y, length_scales, sigma_f: float, sigma_n: float) -> GaussianSurrogate:
    """Fit one GP per candidate length scale and keep the best marginal likelihood."""
    best = None
    for ell in length_scales:
        try:
            m = gp_fit(X, y, ell, sigma_f, sigma_n)
        except NumericalError:
            continue
        if best is None or m.log_marginal_likelihood() > best.log_marginal_likelihood():
            best = m
    if best is None:
        raise NumericalError("no length scale produced a valid GP fit")
    return best
