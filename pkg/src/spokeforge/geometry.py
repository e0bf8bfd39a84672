"""Spoke profile geometry: base curves, PCHIP perturbation, area correction, features.

A spoke is the region between a top and a bottom curve over ``x in [0, 108]`` mm.
The base curves are fixed polynomials; new designs add a monotone cubic Hermite
spline through five knot offsets to each curve and then shift the top curve in
0.001 mm steps until the enclosed area matches the base design within 0.1 %.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DatasetError, DomainError, InfeasibleDesignError, NonConvergenceError

SPOKE_LENGTH = 108.0
N_SAMPLES = 150
KNOT_X = (0.0, 27.0, 54.0, 81.0, 108.0)
TOP_OFFSET_RANGE = (-4.0, 4.0)
BOTTOM_OFFSET_RANGE = (-2.0, 2.0)

AREA_TOLERANCE = 1e-3  # relative
AREA_STEP = 1e-3  # mm
MAX_AREA_ITERATIONS = 20_000
MIN_THICKNESS = 0.5  # mm

N_STATIONS = 12
FEATURE_NAMES = (
    tuple(f"b{i}" for i in range(1, 6))
    + tuple(f"t{i}" for i in range(1, N_STATIONS + 1))
    + ("dmin", "pdmin")
)

# lowest degree first
TOP_COEFFICIENTS = (
    10.731, -0.8865, 0.10641, -0.0054192, 0.00015706,
    -2.4846e-06, 2.1164e-08, -9.1524e-11, 1.5803e-13,
)
BOTTOM_COEFFICIENTS = (0.029891, 0.31518, 0.0052969, -0.00010414, 3.5481e-07)


@dataclass(frozen=True)
class PolynomialCurve:
    """Polynomial ``y(x) = sum(c[i] * x**i)`` valid on ``[0, SPOKE_LENGTH]``."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        if len(self.coefficients) == 0:
            raise DomainError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x):
        return eval_polynomial(self, x)


TOP_CURVE = PolynomialCurve(TOP_COEFFICIENTS)
BOTTOM_CURVE = PolynomialCurve(BOTTOM_COEFFICIENTS)


def _check_span(x, lo: float, hi: float, what: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < lo) or np.any(arr > hi):
        raise DomainError(f"{what} must lie in [{lo}, {hi}], got {x!r}")
    return arr


def eval_polynomial(curve: PolynomialCurve, x):
    """Evaluate ``curve`` at ``x`` (scalar or array) with Horner's scheme.

    Raises:
        DomainError: if any ``x`` falls outside ``[0, 108]``.
    """
    arr = _check_span(x, 0.0, SPOKE_LENGTH, "x")
    acc = np.zeros_like(arr)
    for c in reversed(curve.coefficients):
        acc = acc * arr + c
    return float(acc) if acc.ndim == 0 else acc


# --------------------------------------------------------------------------- PCHIP


@dataclass(frozen=True, eq=False)
class PchipSpline:
    """Piecewise cubic Hermite spline stored as knots plus knot derivatives."""

    x: np.ndarray
    y: np.ndarray
    slopes: np.ndarray

    def __call__(self, xq):
        return pchip_eval(self, xq)


def _edge_slope(h0: float, h1: float, d0: float, d1: float) -> float:
    # one-sided three-point estimate, clamped so the end segment stays monotone
    m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1)
    if np.sign(m) != np.sign(d0):
        return 0.0
    if np.sign(d0) != np.sign(d1) and abs(m) > abs(3.0 * d0):
        return 3.0 * d0
    return m


def pchip_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Fritsch-Carlson derivative estimates at the knots."""
    h = np.diff(x)
    delta = np.diff(y) / h
    n = len(x)
    m = np.zeros(n)
    if n == 2:
        m[:] = delta[0]
        return m
    for k in range(1, n - 1):
        d0, d1 = delta[k - 1], delta[k]
        if d0 == 0.0 or d1 == 0.0 or np.sign(d0) != np.sign(d1):
            continue
        w1 = 2.0 * h[k] + h[k - 1]
        w2 = h[k] + 2.0 * h[k - 1]
        m[k] = (w1 + w2) / (w1 / d0 + w2 / d1)
    m[0] = _edge_slope(h[0], h[1], delta[0], delta[1])
    m[-1] = _edge_slope(h[-1], h[-2], delta[-1], delta[-2])
    return m


def pchip_fit(knot_x: Sequence[float], knot_y: Sequence[float]) -> PchipSpline:
    kx = np.asarray(knot_x, dtype=float)
    ky = np.asarray(knot_y, dtype=float)
    if kx.ndim != 1 or kx.shape != ky.shape or len(kx) < 2:
        raise DomainError("knot_x and knot_y must be equal-length 1-D sequences of at least 2 points")
    if np.any(np.diff(kx) <= 0):
        raise DomainError(f"knot_x must be strictly increasing, got {tuple(kx)}")
    if not (np.all(np.isfinite(kx)) and np.all(np.isfinite(ky))):
        raise DomainError("knots must be finite")
    return PchipSpline(kx, ky, pchip_slopes(kx, ky))


def pchip_eval(spline: PchipSpline, x):
    """Evaluate the spline; ``x`` must lie inside the knot span."""
    xq = _check_span(x, spline.x[0], spline.x[-1], "x")
    k = np.clip(np.searchsorted(spline.x, xq, side="right") - 1, 0, len(spline.x) - 2)
    x0 = spline.x[k]
    h = spline.x[k + 1] - x0
    s = (xq - x0) / h
    s2 = s * s
    s3 = s2 * s
    h00 = 2.0 * s3 - 3.0 * s2 + 1.0
    h10 = s3 - 2.0 * s2 + s
    h01 = -2.0 * s3 + 3.0 * s2
    h11 = s3 - s2
    out = (
        h00 * spline.y[k]
        + h10 * h * spline.slopes[k]
        + h01 * spline.y[k + 1]
        + h11 * h * spline.slopes[k + 1]
    )
    return float(out) if out.ndim == 0 else out


# ----------------------------------------------------------------------- designs


@dataclass(frozen=True)
class DesignGenotype:
    """Ten knot offsets (mm): five on the top curve, five on the bottom curve."""

    top_offsets: tuple[float, ...]
    bottom_offsets: tuple[float, ...]
    knot_x: tuple[float, ...] = field(default=KNOT_X, init=False)

    def __post_init__(self):
        top = tuple(float(v) for v in self.top_offsets)
        bottom = tuple(float(v) for v in self.bottom_offsets)
        if len(top) != 5 or len(bottom) != 5:
            raise DomainError("a genotype has exactly 5 top and 5 bottom offsets")
        _check_range(top, TOP_OFFSET_RANGE, "top offset")
        _check_range(bottom, BOTTOM_OFFSET_RANGE, "bottom offset")
        object.__setattr__(self, "top_offsets", top)
        object.__setattr__(self, "bottom_offsets", bottom)

    @classmethod
    def zero(cls) -> "DesignGenotype":
        return cls((0.0,) * 5, (0.0,) * 5)

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> "DesignGenotype":
        v = [float(a) for a in v]
        if len(v) != 10:
            raise DomainError(f"genotype vector must have 10 entries, got {len(v)}")
        return cls(tuple(v[:5]), tuple(v[5:]))

    def as_vector(self) -> np.ndarray:
        return np.array(self.top_offsets + self.bottom_offsets)


def _check_range(values, bounds, what):
    lo, hi = bounds
    for v in values:
        if not (lo <= v <= hi):
            raise DomainError(f"{what} {v} outside [{lo}, {hi}]")


def genotype_bounds() -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper bounds of the 10-D genotype box."""
    lo = np.array([TOP_OFFSET_RANGE[0]] * 5 + [BOTTOM_OFFSET_RANGE[0]] * 5)
    hi = np.array([TOP_OFFSET_RANGE[1]] * 5 + [BOTTOM_OFFSET_RANGE[1]] * 5)
    return lo, hi


@dataclass(frozen=True, eq=False)
class SpokeProfile:
    """Top and bottom curves of one spoke sampled at ``N_SAMPLES`` abscissae."""

    x: np.ndarray
    y_top: np.ndarray
    y_bottom: np.ndarray
    design_id: str = "base"

    def __post_init__(self):
        for name in ("x", "y_top", "y_bottom"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        x = self.x
        if x.shape != (N_SAMPLES,) or self.y_top.shape != x.shape or self.y_bottom.shape != x.shape:
            raise DomainError(f"profile arrays must each hold {N_SAMPLES} samples")
        if not (np.all(np.isfinite(self.y_top)) and np.all(np.isfinite(self.y_bottom))):
            raise DomainError("profile coordinates must be finite")
        if np.any(np.diff(x) <= 0) or x[0] != 0.0 or x[-1] != SPOKE_LENGTH:
            raise DomainError(f"x must increase strictly from 0 to {SPOKE_LENGTH}")
        t = self.y_top - self.y_bottom
        if np.any(t <= 0):
            i = int(np.argmin(t))
            raise InfeasibleDesignError(
                f"non-positive thickness {t[i]:.4f} mm at x={x[i]:.3f}", float(t[i])
            )

    @property
    def thickness(self) -> np.ndarray:
        return self.y_top - self.y_bottom

    def with_id(self, design_id: str) -> "SpokeProfile":
        return SpokeProfile(self.x, self.y_top, self.y_bottom, design_id)


def sample_x() -> np.ndarray:
    return np.linspace(0.0, SPOKE_LENGTH, N_SAMPLES)


@lru_cache(maxsize=1)
def base_profile() -> SpokeProfile:
    x = sample_x()
    return SpokeProfile(x, eval_polynomial(TOP_CURVE, x), eval_polynomial(BOTTOM_CURVE, x), "base")


def thickness_area(x, thickness) -> float:
    """Trapezoidal integral of a sampled thickness field (mm^2)."""
    return float(np.trapezoid(np.asarray(thickness, dtype=float), np.asarray(x, dtype=float)))


def profile_area(profile: SpokeProfile) -> float:
    """Trapezoidal area between the curves (mm^2)."""
    return thickness_area(profile.x, profile.thickness)


def area_correction_steps(x, thickness, reference_area: float) -> int:
    """Signed number of ``AREA_STEP`` shifts of the top curve that meet the area bound.

    Equivalent to stepping one increment at a time toward ``reference_area`` and
    stopping at the first count within ``AREA_TOLERANCE``; the loop is started
    near its exit point from the closed-form area change of a uniform shift.
    """
    x = np.asarray(x, dtype=float)
    thickness = np.asarray(thickness, dtype=float)

    def rel_err(k: int) -> float:
        return abs(float(np.trapezoid(thickness + k * AREA_STEP, x)) - reference_area) / reference_area

    if rel_err(0) <= AREA_TOLERANCE:
        return 0
    area = float(np.trapezoid(thickness, x))
    direction = -1 if area > reference_area else 1
    span = x[-1] - x[0]
    gap = abs(area - reference_area) - AREA_TOLERANCE * reference_area
    n = max(1, math.ceil(gap / (AREA_STEP * span)) - 1)
    while n > 1 and rel_err(direction * (n - 1)) <= AREA_TOLERANCE:
        n -= 1
    while rel_err(direction * n) > AREA_TOLERANCE:
        n += 1
        if n > MAX_AREA_ITERATIONS:
            raise NonConvergenceError(
                f"area correction did not converge within {MAX_AREA_ITERATIONS} steps"
            )
    if n > MAX_AREA_ITERATIONS:
        raise NonConvergenceError(f"area correction did not converge within {MAX_AREA_ITERATIONS} steps")
    return direction * n


def generate_profile(
    base: SpokeProfile, genotype: DesignGenotype, design_id: str | None = None
) -> SpokeProfile:
    """Perturb ``base`` by the genotype's splines and restore its area.

    Raises:
        NonConvergenceError: the area loop needs more than 20,000 steps.
        InfeasibleDesignError: thickness drops to ``MIN_THICKNESS`` or below.
    """
    x = base.x
    top = base.y_top + pchip_eval(pchip_fit(KNOT_X, genotype.top_offsets), x)
    bottom = base.y_bottom + pchip_eval(pchip_fit(KNOT_X, genotype.bottom_offsets), x)
    k = area_correction_steps(x, top - bottom, profile_area(base))
    if k:
        top = top + k * AREA_STEP
    t = top - bottom
    t_min = float(t.min())
    if t_min <= MIN_THICKNESS:
        i = int(np.argmin(t))
        raise InfeasibleDesignError(
            f"thickness {t_min:.4f} mm at x={x[i]:.3f} is below the {MIN_THICKNESS} mm floor",
            t_min,
        )
    return SpokeProfile(x, top, bottom, design_id or base.design_id)


# ---------------------------------------------------------------------- features


@dataclass(frozen=True)
class FeatureVector:
    bottom_knot_y: tuple[float, ...]
    thickness_12: tuple[float, ...]
    d_min: float
    pd_min: float

    def __post_init__(self):
        if len(self.bottom_knot_y) != 5 or len(self.thickness_12) != N_STATIONS:
            raise DomainError("feature vector needs 5 bottom knots and 12 thicknesses")

    def as_array(self) -> np.ndarray:
        return np.array(self.bottom_knot_y + self.thickness_12 + (self.d_min, self.pd_min))

    @classmethod
    def from_array(cls, a: Sequence[float]) -> "FeatureVector":
        a = [float(v) for v in a]
        if len(a) != len(FEATURE_NAMES):
            raise DomainError(f"expected {len(FEATURE_NAMES)} features, got {len(a)}")
        return cls(tuple(a[:5]), tuple(a[5:17]), a[17], a[18])


def station_x() -> np.ndarray:
    return np.arange(N_STATIONS) * (SPOKE_LENGTH / (N_STATIONS - 1))


def extract_features(profile: SpokeProfile, genotype: DesignGenotype) -> FeatureVector:
    t = profile.thickness
    i = int(np.argmin(t))  # first occurrence on ties
    stations = np.interp(station_x(), profile.x, t)
    return FeatureVector(
        tuple(genotype.bottom_offsets),
        tuple(float(v) for v in stations),
        float(t[i]),
        float(profile.x[i]),
    )


# ---------------------------------------------------------------------- file I/O

PROFILE_HEADER = ("x_mm", "y_top_mm", "y_bottom_mm")
GENOTYPE_HEADER = ("design_id",) + tuple(f"t{i}" for i in range(1, 6)) + tuple(f"b{i}" for i in range(1, 6))


def write_profile_csv(profile: SpokeProfile, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PROFILE_HEADER)
        for row in zip(profile.x, profile.y_top, profile.y_bottom):
            w.writerow([repr(float(v)) for v in row])


def read_profile_csv(path, design_id: str | None = None) -> SpokeProfile:
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != PROFILE_HEADER:
        raise DatasetError(f"{path}: expected header {','.join(PROFILE_HEADER)}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise DatasetError(f"{path}: {exc}") from None
    if data.shape != (N_SAMPLES, 3):
        raise DatasetError(f"{path}: expected {N_SAMPLES} rows of 3 values, got shape {data.shape}")
    return SpokeProfile(data[:, 0], data[:, 1], data[:, 2], design_id or path.stem)


def write_genotypes_csv(items, path) -> None:
    """Write ``(design_id, DesignGenotype)`` pairs."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(GENOTYPE_HEADER)
        for design_id, g in items:
            w.writerow([design_id] + [repr(v) for v in g.top_offsets + g.bottom_offsets])


def read_genotypes_csv(path) -> list[tuple[str, DesignGenotype]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != GENOTYPE_HEADER:
            raise DatasetError(f"{path}: expected header {','.join(GENOTYPE_HEADER)}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append((row[0], DesignGenotype.from_vector(row[1:])))
            except (ValueError, IndexError) as exc:
                raise DatasetError(f"{path}, row {lineno}: {exc}") from None
    return out
