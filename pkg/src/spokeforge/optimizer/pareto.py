"""Nondominated filtering, exact hypervolume and Monte-Carlo expected hypervolume improvement.

Everything here works in minimization form; ``directions`` flips maximized
components before comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ..errors import DomainError


def _signs(directions, m: int) -> np.ndarray:
    if directions is None:
        return np.ones(m)
    s = []
    for d in directions:
        if d in ("min", 1, 1.0):
            s.append(1.0)
        elif d in ("max", -1, -1.0):
            s.append(-1.0)
        else:
            raise DomainError(f"direction must be 'min' or 'max', got {d!r}")
    if len(s) != m:
        raise DomainError(f"{len(s)} directions for {m} objectives")
    return np.array(s)


def dominates(a, b) -> bool:
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def nondominated_mask(F) -> np.ndarray:
    """Mask of rows of ``F`` (minimization) that no other row dominates.

    Exact duplicates keep only their first occurrence.
    """
    F = np.asarray(F, dtype=float)
    n = len(F)
    keep = np.zeros(n, dtype=bool)
    order = np.lexsort(F.T[::-1])  # lexicographic, first column most significant
    front = np.empty((0, F.shape[1]))
    for i in order:
        p = F[i]
        # a lexicographically earlier point is the only kind that can dominate p
        if len(front) and np.any(np.all(front <= p, axis=1)):
            continue
        keep[i] = True
        front = np.vstack([front, p])
    return keep


@dataclass
class ParetoArchive:
    """Mutually nondominated objective vectors with optional payloads."""

    directions: tuple = ()
    reference: np.ndarray | None = None
    points: list[np.ndarray] = field(default_factory=list)
    payloads: list[Any] = field(default_factory=list)

    def _min_form(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return v * _signs(self.directions or None, len(v))

    def insert(self, vector, payload=None) -> bool:
        """Add ``vector`` unless it is weakly dominated; evict members it dominates."""
        v = self._min_form(vector)
        kept_p, kept_l = [], []
        for p, pl in zip(self.points, self.payloads):
            q = self._min_form(p)
            if np.all(q <= v):
                return False
            if not dominates(v, q):
                kept_p.append(p)
                kept_l.append(pl)
        self.points = kept_p + [np.asarray(vector, dtype=float)]
        self.payloads = kept_l + [payload]
        return True

    def __len__(self) -> int:
        return len(self.points)

    def as_array(self) -> np.ndarray:
        m = len(self.directions) if self.directions else (len(self.points[0]) if self.points else 0)
        return np.array(self.points).reshape(len(self.points), m)

    def hypervolume(self, reference=None) -> float:
        ref = self.reference if reference is None else reference
        if ref is None:
            raise DomainError("archive has no reference point")
        if not self.points:
            return 0.0
        signs = _signs(self.directions or None, len(ref))
        return hypervolume(self.as_array() * signs, np.asarray(ref, dtype=float) * signs)


def pareto_filter(points, directions=None, payloads: Sequence | None = None, reference=None) -> ParetoArchive:
    """Nondominated subset of ``points`` under per-component directions."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.size == 0:
        return ParetoArchive(tuple(directions or ()), reference)
    signs = _signs(directions, P.shape[1])
    keep = nondominated_mask(P * signs)
    idx = np.flatnonzero(keep)
    pls = [payloads[i] if payloads is not None else int(i) for i in idx]
    return ParetoArchive(tuple(directions or ()), reference, [P[i] for i in idx], pls)


# ----------------------------------------------------------------- hypervolume


def _check_reference(front: np.ndarray, ref: np.ndarray):
    if front.shape[1] != len(ref):
        raise DomainError("reference point dimension does not match the front")
    if np.any(np.all(front >= ref, axis=1)):
        raise DomainError("reference point is dominated by a front member")


def hypervolume_2d(front, reference) -> float:
    """Area dominated by a 2-D front (minimization), by a sorted sweep."""
    F = np.atleast_2d(np.asarray(front, dtype=float))
    ref = np.asarray(reference, dtype=float)
    if F.size == 0:
        return 0.0
    if F.shape[1] != 2:
        raise DomainError("hypervolume_2d needs 2 objectives")
    _check_reference(F, ref)
    F = F[np.all(F < ref, axis=1)]
    F = F[np.lexsort((F[:, 1], F[:, 0]))]
    area = 0.0
    y_prev = ref[1]
    for x, y in F:
        if y < y_prev:
            area += (ref[0] - x) * (y_prev - y)
            y_prev = y
    return float(area)


def dominated_boxes(front, reference) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint axis-aligned boxes whose union is the region the front dominates.

    Slices along the last objective and recurses on the remaining ones, giving
    ``O(n^(m-1))`` boxes.
    """
    F = np.atleast_2d(np.asarray(front, dtype=float))
    ref = np.asarray(reference, dtype=float)
    m = len(ref)
    F = F[np.all(F < ref, axis=1)] if F.size else F.reshape(0, m)
    if len(F) == 0:
        return np.empty((0, m)), np.empty((0, m))
    if m == 1:
        return np.array([[F[:, 0].min()]]), ref.reshape(1, 1)
    levels = np.unique(F[:, -1])
    lows, highs = [], []
    for k, z in enumerate(levels):
        z_hi = levels[k + 1] if k + 1 < len(levels) else ref[-1]
        lo, hi = dominated_boxes(F[F[:, -1] <= z][:, :-1], ref[:-1])
        if len(lo):
            lows.append(np.column_stack([lo, np.full(len(lo), z)]))
            highs.append(np.column_stack([hi, np.full(len(hi), z_hi)]))
    return np.vstack(lows), np.vstack(highs)


def hypervolume(front, reference) -> float:
    """Exact hypervolume of a minimization front for any number of objectives."""
    F = np.atleast_2d(np.asarray(front, dtype=float))
    ref = np.asarray(reference, dtype=float)
    if F.size == 0:
        return 0.0
    _check_reference(F, ref)
    if F.shape[1] == 2:
        return hypervolume_2d(F, ref)
    lo, hi = dominated_boxes(F, ref)
    return float(np.sum(np.prod(hi - lo, axis=1)))


def hypervolume_improvement(front, reference, points, chunk: int = 256) -> np.ndarray:
    """HV(front + p) - HV(front) for every row ``p`` of ``points``."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    ref = np.asarray(reference, dtype=float)
    F = np.atleast_2d(np.asarray(front, dtype=float)) if len(front) else np.empty((0, len(ref)))
    lo, hi = dominated_boxes(F, ref) if len(F) else (np.empty((0, len(ref))),) * 2
    own = np.prod(np.clip(ref - P, 0.0, None), axis=1)
    if len(lo) == 0:
        return own
    out = np.empty(len(P))
    for s in range(0, len(P), chunk):
        p = P[s : s + chunk, None, :]
        overlap = np.prod(np.clip(hi[None] - np.maximum(lo[None], p), 0.0, None), axis=2)
        out[s : s + chunk] = own[s : s + chunk] - overlap.sum(axis=1)
    return np.maximum(out, 0.0)


def ehvi_mc(models, front, reference, candidates, n_draws: int = 256, seed: int = 0) -> np.ndarray:
    """Monte-Carlo expected hypervolume improvement of each candidate.

    ``models`` is a sequence of callables mapping candidates ``(k, d)`` to
    posterior ``(mean, std)`` arrays, one per objective, in minimization form.
    Draws use common random numbers shared by all candidates.
    """
    C = np.atleast_2d(np.asarray(candidates, dtype=float))
    ref = np.asarray(reference, dtype=float)
    F = np.atleast_2d(np.asarray(front, dtype=float)) if len(front) else np.empty((0, len(ref)))
    if len(F):
        _check_reference(F, ref)
    z = np.random.default_rng(seed).standard_normal((n_draws, len(models)))
    post = [m(C) for m in models]
    mu = np.column_stack([p[0] for p in post])
    sd = np.column_stack([p[1] for p in post])
    out = np.empty(len(C))
    for i in range(len(C)):
        samples = mu[i] + sd[i] * z
        out[i] = hypervolume_improvement(F, ref, samples).mean()
    return out


def simplex_weights(m: int, resolution: int) -> np.ndarray:
    """All weight vectors on the ``m``-simplex with step ``1/resolution``."""
    out = []

    def rec(prefix, left):
        if len(prefix) == m - 1:
            out.append(prefix + [left])
            return
        for k in range(left + 1):
            rec(prefix + [k], left - k)

    rec([], resolution)
    return np.array(out, dtype=float)[::-1] / resolution
