"""Performance records: analytic proxy evaluator, vibration spectrum, dataset ingest.

The proxy is a deterministic stand-in for finite-element results. Raw scores are
built from thickness and curvature summaries of a profile and scaled so the
base design reproduces the reference record exactly.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DatasetError, DomainError, InfeasibleDesignError
from .geometry import FEATURE_NAMES, SPOKE_LENGTH, FeatureVector, SpokeProfile, base_profile

logger = logging.getLogger(__name__)

OUTPUTS = ("rfc", "rft", "sedc", "sedt", "vib_rms")

# Mooney-Rivlin 5-parameter constants of the spoke polyurethane; documentation only.
MOONEY_RIVLIN_5 = {"C10": -16.565, "C01": 30.572, "C20": -0.0281, "C11": 0.3005, "C02": 3.7316}

CURVATURE_WEIGHT = 2.0
SAMPLE_RATE = 2000.0  # Hz
DURATION = 1.0  # s
N_CYCLES = 20
BASE_FREQUENCY = 250.0  # Hz
DECAY_RATE = 40.0  # 1/s
FREQ_CLAMP = (50.0, 950.0)
BAND = (100.0, 470.0)


@dataclass(frozen=True)
class PerformanceRecord:
    rfc: float
    rft: float
    sedc: float
    sedt: float
    vib_rms: float

    def __post_init__(self):
        for name in OUTPUTS:
            object.__setattr__(self, name, float(getattr(self, name)))
        vals = self.as_tuple()
        if not all(math.isfinite(v) for v in vals):
            raise DomainError(f"performance values must be finite: {vals}")
        if self.rfc <= 0 or self.rft <= 0 or self.vib_rms <= 0:
            raise DomainError(f"rfc, rft and vib_rms must be positive: {vals}")
        if self.sedc < 0 or self.sedt < 0:
            raise DomainError(f"strain energy densities must be non-negative: {vals}")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.rfc, self.rft, self.sedc, self.sedt, self.vib_rms)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(OUTPUTS, self.as_tuple()))

    def __getitem__(self, name: str) -> float:
        if name not in OUTPUTS:
            raise KeyError(name)
        return getattr(self, name)


REFERENCE_RECORD = PerformanceRecord(rfc=1000.0, rft=10000.0, sedc=0.10, sedt=2.565, vib_rms=2.4216)


@dataclass(frozen=True)
class TimeSeries:
    sample_rate: float
    samples: np.ndarray
    clamped: bool = False  # natural frequency was forced into FREQ_CLAMP

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if self.sample_rate <= 0 or s.ndim != 1 or len(s) < 2:
            raise DomainError("time series needs sample_rate > 0 and at least 2 samples")
        object.__setattr__(self, "samples", s)

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self.samples)) / self.sample_rate


# -------------------------------------------------------------- geometry summary


@dataclass(frozen=True)
class GeometrySummary:
    t_mean: float
    t_harm: float
    j_bend: float
    kappa: float
    r_min: float


def second_difference(y: np.ndarray, h: float) -> np.ndarray:
    """Central second differences, second-order one-sided stencils at both ends."""
    d2 = np.empty_like(y)
    d2[1:-1] = (y[2:] - 2.0 * y[1:-1] + y[:-2]) / h**2
    d2[0] = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / h**2
    d2[-1] = (2.0 * y[-1] - 5.0 * y[-2] + 4.0 * y[-3] - y[-4]) / h**2
    return d2


def proxy_geometry_summaries(profile: SpokeProfile) -> GeometrySummary:
    x = profile.x
    t = profile.thickness
    if np.any(t <= 0):
        raise InfeasibleDesignError("non-positive thickness", float(t.min()))
    span = x[-1] - x[0]
    t_mean = float(np.trapezoid(t, x)) / span
    t_harm = span / float(np.trapezoid(1.0 / t, x))
    j_bend = float(np.trapezoid(t**-3, x)) / span
    h = span / (len(x) - 1)
    kappa = float(np.trapezoid(np.abs(second_difference(profile.y_top, h)), x))
    return GeometrySummary(float(t_mean), float(t_harm), float(j_bend), kappa, float(t.min()) / float(t_mean))


@dataclass(frozen=True)
class RawScores:
    rfc: float
    rft: float
    sedc: float
    sedt: float
    frequency: float  # natural frequency before clamping, Hz (nan until calibrated)
    amplitude: float  # burst amplitude per unit amplitude scale


def raw_scores(summary: GeometrySummary) -> RawScores:
    damp = 1.0 + CURVATURE_WEIGHT * summary.kappa
    inv_r = 1.0 / summary.r_min
    return RawScores(
        rfc=1.0 / (summary.j_bend * damp),
        rft=summary.t_harm / damp,
        sedc=inv_r / damp,
        sedt=inv_r**2 / damp,
        frequency=float("nan"),
        amplitude=(inv_r - 1.0 + 0.1) / damp,
    )


# ----------------------------------------------------------------- spectral ops


def _fft_radix2(a: np.ndarray) -> np.ndarray:
    """Iterative radix-2 decimation-in-time FFT; ``len(a)`` must be a power of two."""
    n = len(a)
    if n < 1 or n & (n - 1):
        raise DomainError(f"radix-2 FFT needs a power-of-two length, got {n}")
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    out = np.asarray(a, dtype=complex)[rev]
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = out.reshape(-1, size)
        even = blocks[:, :half].copy()
        odd = blocks[:, half:] * tw
        blocks[:, :half] = even + odd
        blocks[:, half:] = even - odd
        out = blocks.reshape(-1)
        size *= 2
    return out


def next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length()


def fft_complex(series: TimeSeries) -> tuple[np.ndarray, np.ndarray]:
    """One-sided normalized complex spectrum ``(freqs, coeffs)``.

    The signal is zero-padded to the next power of two. Coefficients are divided
    by the unpadded length and non-DC bins are doubled.
    """
    n = len(series.samples)
    padded_len = next_pow2(n)
    buf = np.zeros(padded_len)
    buf[:n] = series.samples
    spec = _fft_radix2(buf)[: padded_len // 2 + 1] / n
    spec[1:] *= 2.0
    freqs = np.arange(padded_len // 2 + 1) * (series.sample_rate / padded_len)
    return freqs, spec


def fft_magnitudes(series: TimeSeries) -> tuple[np.ndarray, np.ndarray]:
    freqs, spec = fft_complex(series)
    return freqs, np.abs(spec)


def band_rms(freqs: Sequence[float], magnitudes: Sequence[float], f_lo=BAND[0], f_hi=BAND[1]) -> float:
    """RMS of spectrum magnitudes over ``f_lo <= f <= f_hi``."""
    f = np.asarray(freqs, dtype=float)
    m = np.asarray(magnitudes, dtype=float)
    sel = (f >= f_lo) & (f <= f_hi)
    if not np.any(sel):
        raise DomainError(f"no spectrum bins inside [{f_lo}, {f_hi}] Hz")
    return float(np.sqrt(np.mean(m[sel] ** 2)))


def burst_signal(frequency: float, amplitude: float) -> np.ndarray:
    """Decaying sinusoid bursts fired at the start of each rotation cycle."""
    n = int(round(SAMPLE_RATE * DURATION))
    t = np.arange(n) / SAMPLE_RATE
    sig = np.zeros(n)
    for k in range(N_CYCLES):
        tau = t - k * DURATION / N_CYCLES
        on = tau >= 0
        sig[on] += np.exp(-DECAY_RATE * tau[on]) * np.sin(2.0 * np.pi * frequency * tau[on])
    return amplitude * sig


def _natural_frequency(rfc_raw: float, rfc_raw_base: float) -> tuple[float, bool]:
    f = BASE_FREQUENCY * math.sqrt(rfc_raw / rfc_raw_base)
    lo, hi = FREQ_CLAMP
    if f < lo or f > hi:
        logger.warning("natural frequency %.1f Hz clamped to [%g, %g]", f, lo, hi)
        return min(max(f, lo), hi), True
    return f, False


# ------------------------------------------------------------------ calibration


@dataclass(frozen=True)
class ProxyCalibration:
    """Base-design raw scores and the reference record they map onto."""

    reference: PerformanceRecord
    base_raw: tuple[float, ...]  # raw (rfc, rft, sedc, sedt, vib_rms) of the base design
    base_rfc_raw: float

    @property
    def scale_factors(self) -> dict[str, float]:
        return {k: r / b for k, r, b in zip(OUTPUTS, self.reference.as_tuple(), self.base_raw)}

    @property
    def amplitude_scale(self) -> float:
        return self.reference.vib_rms / self.base_raw[4]

    def apply(self, raw: Sequence[float]) -> PerformanceRecord:
        # ratio form keeps the base design bit-exact
        vals = [r * (v / b) for r, v, b in zip(self.reference.as_tuple(), raw, self.base_raw)]
        return PerformanceRecord(*vals)


def _vibration_raw(profile: SpokeProfile, base_rfc_raw: float, amplitude_scale: float = 1.0):
    scores = raw_scores(proxy_geometry_summaries(profile))
    f, clamped = _natural_frequency(scores.rfc, base_rfc_raw)
    sig = TimeSeries(SAMPLE_RATE, burst_signal(f, amplitude_scale * scores.amplitude), clamped)
    return scores, sig


def calibrate(base: SpokeProfile | None = None, reference: PerformanceRecord = REFERENCE_RECORD) -> ProxyCalibration:
    base = base if base is not None else base_profile()
    scores = raw_scores(proxy_geometry_summaries(base))
    _, sig = _vibration_raw(base, scores.rfc)
    vib = band_rms(*fft_magnitudes(sig))
    return ProxyCalibration(reference, (scores.rfc, scores.rft, scores.sedc, scores.sedt, vib), scores.rfc)


_default_calibration: ProxyCalibration | None = None


def default_calibration() -> ProxyCalibration:
    global _default_calibration
    if _default_calibration is None:
        _default_calibration = calibrate()
    return _default_calibration


def synthesize_vibration_signal(profile: SpokeProfile, calibration: ProxyCalibration) -> TimeSeries:
    return _vibration_raw(profile, calibration.base_rfc_raw, calibration.amplitude_scale)[1]


def proxy_evaluate(profile: SpokeProfile, calibration: ProxyCalibration | None = None) -> PerformanceRecord:
    calibration = calibration or default_calibration()
    scores, sig = _vibration_raw(profile, calibration.base_rfc_raw)
    vib = band_rms(*fft_magnitudes(sig))
    return calibration.apply((scores.rfc, scores.rft, scores.sedc, scores.sedt, vib))


# --------------------------------------------------------------------- datasets

DATASET_HEADER = ("design_id",) + FEATURE_NAMES + OUTPUTS


@dataclass(frozen=True)
class DatasetRow:
    design_id: str
    features: FeatureVector
    record: PerformanceRecord


def write_dataset(rows: Sequence[DatasetRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DATASET_HEADER)
        for r in rows:
            vals = list(r.features.as_array()) + list(r.record.as_tuple())
            w.writerow([r.design_id] + [repr(float(v)) for v in vals])


def ingest_dataset(path) -> list[DatasetRow]:
    """Parse and validate a feature/performance CSV.

    Raises:
        DatasetError: on header mismatch, empty data, unparsable or non-finite
            values, or duplicate design ids. Messages carry the 1-based file line.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"{path}: no such dataset file")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise DatasetError(f"{path}: empty dataset")
        header = [h.strip() for h in header]
        if tuple(header) != DATASET_HEADER:
            raise DatasetError(
                f"{path}: schema mismatch; expected {','.join(DATASET_HEADER)}, got {','.join(header)}"
            )
        rows: list[DatasetRow] = []
        seen: dict[str, int] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(DATASET_HEADER):
                raise DatasetError(f"{path}, row {lineno}: expected {len(DATASET_HEADER)} fields, got {len(row)}")
            design_id = row[0].strip()
            if design_id in seen:
                raise DatasetError(f"{path}, row {lineno}: duplicate design_id {design_id!r} (first at row {seen[design_id]})")
            seen[design_id] = lineno
            try:
                vals = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise DatasetError(f"{path}, row {lineno}: {exc}") from None
            bad = [DATASET_HEADER[i + 1] for i, v in enumerate(vals) if not math.isfinite(v)]
            if bad:
                raise DatasetError(f"{path}, row {lineno}: non-finite value in {', '.join(bad)}")
            try:
                rec = PerformanceRecord(*vals[len(FEATURE_NAMES):])
            except DomainError as exc:
                raise DatasetError(f"{path}, row {lineno}: {exc}") from None
            rows.append(DatasetRow(design_id, FeatureVector.from_array(vals[: len(FEATURE_NAMES)]), rec))
    if not rows:
        raise DatasetError(f"{path}: empty dataset")
    logger.info("ingested %d designs from %s", len(rows), path)
    return rows


def write_signal_csv(series: TimeSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("t_s", "displacement_mm"))
        for t, v in zip(series.t, series.samples):
            w.writerow((repr(float(t)), repr(float(v))))


def write_spectrum_csv(freqs, magnitudes, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("f_hz", "magnitude"))
        for f, m in zip(freqs, magnitudes):
            w.writerow((repr(float(f)), repr(float(m))))
