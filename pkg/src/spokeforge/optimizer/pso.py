"""Bounded particle swarm minimization with a reproducible random stream."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import DomainError

logger = logging.getLogger(__name__)

RNG_ALGORITHM = "numpy.PCG64"


@dataclass
class SwarmState:
    positions: np.ndarray
    velocities: np.ndarray
    values: np.ndarray
    best_positions: np.ndarray
    best_values: np.ndarray
    g_best: np.ndarray
    g_best_value: float
    omega: float
    c1: float
    c2: float
    rng: np.random.Generator


@dataclass
class PsoResult:
    best_x: np.ndarray
    best_value: float
    trace: list[tuple[int, float, np.ndarray]]  # (iteration, g_best value, g_best position)
    history_x: np.ndarray  # (n_iters + 1, n_particles, d)
    history_f: np.ndarray  # (n_iters + 1, n_particles)
    nonfinite: int = 0
    rng_algorithm: str = field(default=RNG_ALGORITHM)

    @property
    def trace_values(self) -> np.ndarray:
        return np.array([v for _, v, _ in self.trace])


def _evaluate(objective, X, vectorized):
    if vectorized:
        f = np.asarray(objective(X), dtype=float).reshape(len(X))
    else:
        f = np.array([float(objective(x)) for x in X])
    bad = ~np.isfinite(f)
    f[bad] = np.inf
    return f, int(bad.sum())


def pso_run(
    objective: Callable,
    bounds,
    omega: float = 0.7,
    c1: float = 1.5,
    c2: float = 1.5,
    n_particles: int = 30,
    n_iters: int = 200,
    seed: int = 42,
    vectorized: bool = False,
    per_dimension: bool = True,
    callback: Callable[[int, SwarmState], None] | None = None,
) -> PsoResult:
    """Minimize ``objective`` over the box ``bounds = (lower, upper)``.

    Velocities start at zero and positions uniformly in the box. Each
    iteration draws the random factors for every particle up front, particle
    by particle and r1 before r2; with ``per_dimension`` (default) r1 and r2
    are ``d``-vectors, otherwise one scalar each. All particles then update
    synchronously against the previous global best. Components pushed outside the box are
    clamped and their velocity is zeroed. Non-finite objective values count
    as ``+inf``.

    With ``vectorized=True`` the objective receives the whole ``(n, d)``
    swarm and returns ``n`` values.
    """
    lo, hi = (np.asarray(b, dtype=float) for b in bounds)
    if lo.shape != hi.shape or lo.ndim != 1 or np.any(hi < lo):
        raise DomainError("bounds must be two equal-length vectors with lower <= upper")
    if n_particles < 2 or n_iters < 0:
        raise DomainError("need n_particles >= 2 and n_iters >= 0")
    d = len(lo)
    rng = np.random.default_rng(seed)

    X = lo + (hi - lo) * rng.random((n_particles, d))
    V = np.zeros_like(X)
    f, nonfinite = _evaluate(objective, X, vectorized)
    P, pf = X.copy(), f.copy()
    gi = int(np.argmin(pf))
    state = SwarmState(X, V, f, P, pf, P[gi].copy(), float(pf[gi]), omega, c1, c2, rng)
    trace = [(0, state.g_best_value, state.g_best.copy())]
    hx, hf = [X.copy()], [f.copy()]

    for it in range(1, n_iters + 1):
        if per_dimension:
            r = rng.random((n_particles, 2, d))
            r1, r2 = r[:, 0], r[:, 1]
        else:
            r = rng.random((n_particles, 2))
            r1, r2 = r[:, :1], r[:, 1:]
        V = omega * V + c1 * r1 * (P - X) + c2 * r2 * (state.g_best - X)
        X = X + V
        out = (X < lo) | (X > hi)
        X = np.clip(X, lo, hi)
        V[out] = 0.0
        f, nf = _evaluate(objective, X, vectorized)
        nonfinite += nf
        better = f < pf
        P[better] = X[better]
        pf[better] = f[better]
        gi = int(np.argmin(pf))
        if pf[gi] < state.g_best_value:
            state.g_best = P[gi].copy()
            state.g_best_value = float(pf[gi])
        state.positions, state.velocities, state.values = X, V, f
        trace.append((it, state.g_best_value, state.g_best.copy()))
        hx.append(X.copy())
        hf.append(f.copy())
        if callback is not None:
            callback(it, state)

    if nonfinite:
        logger.info("%d objective evaluations were non-finite and treated as +inf", nonfinite)
    return PsoResult(state.g_best, state.g_best_value, trace, np.array(hx), np.array(hf), nonfinite)
