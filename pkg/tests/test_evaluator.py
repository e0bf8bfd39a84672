import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spokeforge.errors import DatasetError, DomainError, InfeasibleDesignError
from spokeforge.evaluator import (
    DATASET_HEADER,
    OUTPUTS,
    REFERENCE_RECORD,
    DatasetRow,
    PerformanceRecord,
    TimeSeries,
    _fft_radix2,
    _natural_frequency,
    band_rms,
    burst_signal,
    calibrate,
    default_calibration,
    fft_complex,
    fft_magnitudes,
    ingest_dataset,
    next_pow2,
    proxy_evaluate,
    proxy_geometry_summaries,
    second_difference,
    synthesize_vibration_signal,
    write_dataset,
)
from spokeforge.geometry import (
    BOTTOM_CURVE,
    TOP_CURVE,
    DesignGenotype,
    base_profile,
    eval_polynomial,
    extract_features,
    generate_profile,
)


def direct_dft(x: np.ndarray, n_pad: int) -> np.ndarray:
    """O(n^2) one-sided normalized spectrum, written from the definition."""
    n = len(x)
    xp = np.zeros(n_pad)
    xp[:n] = x
    k = np.arange(n_pad // 2 + 1)[:, None]
    j = np.arange(n_pad)[None, :]
    X = (xp[None, :] * np.exp(-2j * np.pi * k * j / n_pad)).sum(axis=1) / n
    X[1:] *= 2.0
    return X


def test_fft_matches_direct_dft(rng):
    for _ in range(50):
        n = int(rng.integers(2, 1025))
        x = rng.normal(size=n)
        freqs, X = fft_complex(TimeSeries(1000.0, x))
        ref = direct_dft(x, next_pow2(n))
        assert np.max(np.abs(X - ref)) < 1e-8
        assert freqs[1] == pytest.approx(1000.0 / next_pow2(n))


@settings(max_examples=40)
@given(st.integers(0, 10).map(lambda p: 2**p), st.integers(0, 2**31))
def test_radix2_parseval(n, seed):
    x = np.random.default_rng(seed).normal(size=n) + 0j
    X = _fft_radix2(x)
    assert np.sum(np.abs(X) ** 2) / n == pytest.approx(np.sum(np.abs(x) ** 2), rel=1e-10)


def test_radix2_rejects_non_power_of_two():
    with pytest.raises(DomainError):
        _fft_radix2(np.ones(6))


def test_pure_sinusoid_has_unit_peak():
    t = np.arange(1024) / 2000.0
    freqs, mags = fft_magnitudes(TimeSeries(2000.0, np.sin(2 * np.pi * 250.0 * t)))
    k = int(np.argmax(mags))
    assert freqs[k] == 250.0
    assert mags[k] == pytest.approx(1.0, abs=1e-6)
    rest = np.delete(mags, k)
    assert rest.max() < 1e-9


def test_band_rms_hand_example():
    f = np.array([50.0, 100.0, 200.0, 470.0, 500.0])
    m = np.array([9.0, 3.0, 4.0, 0.0, 9.0])
    assert band_rms(f, m) == pytest.approx(math.sqrt(25.0 / 3.0))
    with pytest.raises(DomainError):
        band_rms(f, m, 600.0, 700.0)


def test_burst_signal_pointwise():
    sig = burst_signal(250.0, 2.0)
    assert sig.shape == (2000,)
    for i in (0, 1, 57, 100, 101, 1999):
        t = i / 2000.0
        ref = 0.0
        for k in range(20):
            tau = t - k * 0.05
            if tau >= 0:
                ref += math.exp(-40.0 * tau) * math.sin(2 * math.pi * 250.0 * tau)
        assert sig[i] == pytest.approx(2.0 * ref, abs=1e-12)


def test_natural_frequency_clamps():
    assert _natural_frequency(1.0, 1.0) == (250.0, False)
    f, clamped = _natural_frequency(0.01, 1.0)
    assert clamped and f == 50.0
    f, clamped = _natural_frequency(100.0, 1.0)
    assert clamped and f == 950.0


def test_second_difference_exact_on_cubics():
    x = np.linspace(0, 2, 21)
    h = x[1] - x[0]
    y = x**3 - 2 * x**2 + 0.5
    assert np.allclose(second_difference(y, h), 6 * x - 4, atol=1e-9)


def test_geometry_summaries_match_fine_quadrature():
    s = proxy_geometry_summaries(base_profile())
    xf = np.linspace(0, 108, 200_001)
    t = eval_polynomial(TOP_CURVE, xf) - eval_polynomial(BOTTOM_CURVE, xf)
    assert s.t_mean == pytest.approx(np.trapezoid(t, xf) / 108, rel=1e-4)
    assert s.t_harm == pytest.approx(108 / np.trapezoid(1 / t, xf), rel=1e-3)
    assert s.j_bend == pytest.approx(np.trapezoid(t**-3, xf) / 108, rel=5e-3)
    d2 = np.abs(np.gradient(np.gradient(eval_polynomial(TOP_CURVE, xf), xf), xf))
    assert s.kappa == pytest.approx(np.trapezoid(d2, xf), rel=1e-2)
    assert s.r_min == pytest.approx(t.min() / s.t_mean, rel=1e-4)


def test_calibration_identity():
    rec = proxy_evaluate(base_profile())
    assert rec == REFERENCE_RECORD
    assert rec.vib_rms == 2.4216
    assert all(type(v) is float for v in rec.as_tuple())


def test_calibration_scales_and_signal():
    cal = default_calibration()
    assert cal is default_calibration()
    assert set(cal.scale_factors) == set(OUTPUTS)
    sig = synthesize_vibration_signal(base_profile(), cal)
    assert not sig.clamped
    assert band_rms(*fft_magnitudes(sig)) == pytest.approx(2.4216, rel=1e-12)
    custom = calibrate(reference=PerformanceRecord(1.0, 2.0, 3.0, 4.0, 5.0))
    assert proxy_evaluate(base_profile(), custom).as_tuple() == (1.0, 2.0, 3.0, 4.0, 5.0)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=10, max_size=10))
def test_proxy_records_are_valid(u):
    v = [4 * a for a in u[:5]] + [2 * a for a in u[5:]]
    try:
        p = generate_profile(base_profile(), DesignGenotype.from_vector(v))
    except InfeasibleDesignError:
        return
    rec = proxy_evaluate(p)
    assert rec.rfc > 0 and rec.rft > 0 and rec.vib_rms > 0
    assert rec.sedc >= 0 and rec.sedt >= 0
    assert proxy_evaluate(p) == rec  # deterministic


def test_record_invariants():
    with pytest.raises(DomainError):
        PerformanceRecord(1.0, 1.0, -0.1, 1.0, 1.0)
    with pytest.raises(DomainError):
        PerformanceRecord(0.0, 1.0, 0.1, 1.0, 1.0)
    with pytest.raises(DomainError):
        PerformanceRecord(1.0, float("nan"), 0.1, 1.0, 1.0)
    r = PerformanceRecord(np.float64(1.0), 2, 0.0, 0.0, 3.0)
    assert type(r.rfc) is float and r["rft"] == 2.0
    with pytest.raises(KeyError):
        r["mass"]


def _rows(n=3):
    base = base_profile()
    f = extract_features(base, DesignGenotype.zero())
    return [DatasetRow(f"s{i}", f, PerformanceRecord(1.0 + i, 2.0, 0.1, 0.2, 0.3)) for i in range(n)]


def test_dataset_round_trip(tmp_path):
    rows = _rows()
    write_dataset(rows, tmp_path / "d.csv")
    back = ingest_dataset(tmp_path / "d.csv")
    assert back == rows


@pytest.mark.parametrize(
    "mutate, needle",
    [
        (lambda lines: lines[:1], "empty"),
        (lambda lines: [], "empty"),
        (lambda lines: ["id," + lines[0].split(",", 1)[1]] + lines[1:], "schema mismatch"),
        (lambda lines: lines[:2] + [lines[2].rsplit(",", 1)[0] + ",nan"] + lines[3:], "row 3"),
        (lambda lines: lines[:2] + [lines[1]], "duplicate"),
        (lambda lines: lines[:2] + [lines[2].rsplit(",", 1)[0] + ",-1.0"], "row 3"),
    ],
)
def test_dataset_errors(tmp_path, mutate, needle):
    write_dataset(_rows(), tmp_path / "d.csv")
    lines = (tmp_path / "d.csv").read_text().splitlines()
    (tmp_path / "d.csv").write_text("\n".join(mutate(lines)) + "\n")
    with pytest.raises(DatasetError, match=needle):
        ingest_dataset(tmp_path / "d.csv")


def test_dataset_header():
    assert DATASET_HEADER[0] == "design_id" and DATASET_HEADER[-5:] == OUTPUTS
    assert len(DATASET_HEADER) == 25
