"""Bayesian optimization: EI for one objective, Monte-Carlo EHVI for several."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import DomainError
from .gp import expected_improvement, fit_by_marginal_likelihood, gp_posterior
from .pareto import ehvi_mc, nondominated_mask
from .pso import RNG_ALGORITHM

logger = logging.getLogger(__name__)

LENGTH_SCALES = (0.5, 1.0, 2.0, 4.0)
N_CANDIDATES = 2048
NOISE_FRACTION = 1e-6  # noise variance relative to signal variance


@dataclass
class BoResult:
    best_x: np.ndarray
    best_value: float
    trace: list[tuple[int, float, np.ndarray]]  # (iteration, best so far, its position)
    X: np.ndarray  # every query in order
    y: np.ndarray
    rng_algorithm: str = field(default=RNG_ALGORITHM)


def _standardize(y: np.ndarray) -> np.ndarray:
    """Zero-mean unit-std scores; non-finite entries are imputed with the worst finite value."""
    finite = np.isfinite(y)
    if not finite.any():
        return np.zeros_like(y)
    y = np.where(finite, y, y[finite].max())
    sd = y.std()
    return (y - y.mean()) / sd if sd > 0 else np.zeros_like(y)


def _fit(U: np.ndarray, ys: np.ndarray):
    sigma_f = float(ys.std()) or 1.0
    return fit_by_marginal_likelihood(U, ys, LENGTH_SCALES, sigma_f, np.sqrt(NOISE_FRACTION) * sigma_f)


def _eval(objective, x) -> float:
    v = float(objective(x))
    return v if np.isfinite(v) else np.inf


def bo_run(
    objective: Callable,
    bounds,
    n_init: int = 5,
    n_iters: int = 30,
    seed: int = 0,
    n_candidates: int = N_CANDIDATES,
) -> BoResult:
    """Minimize ``objective`` over a box with a GP surrogate and expected improvement.

    Inputs are mapped to the unit box and observed values standardized before
    every GP fit. The length scale is chosen from ``LENGTH_SCALES`` by marginal
    likelihood. Each iteration scores ``n_candidates`` uniform candidates and
    queries the EI maximizer, or the most uncertain candidate when every EI is 0.
    """
    lo, hi = (np.asarray(b, dtype=float) for b in bounds)
    if n_init < 2:
        raise DomainError("n_init must be at least 2")
    span = hi - lo
    rng = np.random.default_rng(seed)
    U = rng.random((n_init, len(lo)))
    y = np.array([_eval(objective, lo + span * u) for u in U])
    best = int(np.argmin(y))
    trace = [(0, float(y[best]), lo + span * U[best])]
    for it in range(1, n_iters + 1):
        ys = _standardize(y)
        gp = _fit(U, ys)
        cand = rng.random((n_candidates, len(lo)))
        mu, sd = gp_posterior(gp, cand)
        ei = expected_improvement(mu, sd, ys.min())
        k = int(np.argmax(ei)) if np.any(ei > 0) else int(np.argmax(sd))
        u = cand[k]
        U = np.vstack([U, u])
        y = np.append(y, _eval(objective, lo + span * u))
        best = int(np.argmin(y))
        trace.append((it, float(y[best]), lo + span * U[best]))
    return BoResult(lo + span * U[best], float(y[best]), trace, lo + span * U, y)


@dataclass
class MoBoResult:
    X: np.ndarray
    F: np.ndarray  # minimization-form objective vectors of every query
    iteration: np.ndarray  # iteration at which each query was made (0 = initial design)
    front_mask: np.ndarray
    reference: np.ndarray
    rng_algorithm: str = field(default=RNG_ALGORITHM)


def reference_point(F: np.ndarray) -> np.ndarray:
    """Componentwise worst observed value pushed outward by 10 %."""
    worst = F.max(axis=0)
    return worst + 0.1 * np.abs(worst) + 1e-12


def bo_run_multi(
    objective: Callable,
    bounds,
    n_init: int = 10,
    n_iters: int = 30,
    seed: int = 0,
    n_draws: int = 256,
    n_candidates: int = 512,
) -> MoBoResult:
    """Multi-objective BO maximizing Monte-Carlo EHVI.

    ``objective`` maps a point to a vector in minimization form; rows with
    non-finite entries are kept in the record but excluded from the models.
    """
    lo, hi = (np.asarray(b, dtype=float) for b in bounds)
    if n_init < 2:
        raise DomainError("n_init must be at least 2")
    span = hi - lo
    rng = np.random.default_rng(seed)
    U = rng.random((n_init, len(lo)))
    F = np.array([np.asarray(objective(lo + span * u), dtype=float) for u in U])
    iters = [0] * n_init
    for it in range(1, n_iters + 1):
        ok = np.all(np.isfinite(F), axis=1)
        cand = rng.random((n_candidates, len(lo)))
        draw_seed = int(rng.integers(2**32))
        if ok.sum() < 2:
            k = 0
        else:
            Fo, Uo = F[ok], U[ok]
            mean, sd = Fo.mean(axis=0), Fo.std(axis=0)
            sd = np.where(sd > 0, sd, 1.0)
            models = []
            for j in range(F.shape[1]):
                gp = _fit(Uo, (Fo[:, j] - mean[j]) / sd[j])

                def post(C, gp=gp, j=j):
                    m, s = gp_posterior(gp, C)
                    return m * sd[j] + mean[j], s * sd[j]

                models.append(post)
            front = Fo[nondominated_mask(Fo)]
            ehvi = ehvi_mc(models, front, reference_point(Fo), cand, n_draws, draw_seed)
            k = int(np.argmax(ehvi))
        U = np.vstack([U, cand[k]])
        F = np.vstack([F, np.asarray(objective(lo + span * cand[k]), dtype=float)])
        iters.append(it)
    ok = np.all(np.isfinite(F), axis=1)
    mask = np.zeros(len(F), dtype=bool)
    mask[np.flatnonzero(ok)[nondominated_mask(F[ok])]] = True
    return MoBoResult(lo + span * U, F, np.array(iters), mask, reference_point(F[ok]) if ok.any() else np.full(F.shape[1], np.nan))
