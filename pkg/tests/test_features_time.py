import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecgarrhythmia import features_time as ft
from ecgarrhythmia.delineate import delineate
from ecgarrhythmia.domain import (
    HRV_BASIC_NAMES,
    HRV_EXTENDED_NAMES,
    Beat,
    EcgRecord,
    FiducialMap,
    RhythmLabel,
)
from ecgarrhythmia.errors import NoBeatsDetected, SeriesTooShort, TooFewBeats, ZeroVariance
from ecgarrhythmia.preprocess import clean
from ecgarrhythmia.synthgen import RhythmScript, generate

import oracles

# Frozen from tests/oracles.py (brute-force loops over all template pairs).
UNIFORM200_SEED3_APEN = 0.8844627521923858
UNIFORM200_SEED3_SAMPEN_COUNTS = (19, 204)
UNIFORM200_SEED3_SAMPEN = 2.373681014677776
NOISE1000_SEED5_HFD = 1.983183633383126

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def _uniform200():
    return np.random.default_rng(3).uniform(size=200)


# -- heart rate and simple statistics ---------------------------------------

def test_heart_rate_series():
    assert ft.heart_rate_series([0, 500, 1000], 500).tolist() == [60.0, 60.0]
    assert ft.heart_rate_series([0, 250], 500).tolist() == [120.0]
    with pytest.raises(NoBeatsDetected):
        ft.heart_rate_series([0], 500)


@pytest.mark.parametrize("x, expected", [([60, 70, 60], 10.0), ([5, 5, 5, 5], 0.0), ([1, 2, 4], 1.5)])
def test_mean_abs_diff(x, expected):
    assert ft.mean_abs_diff(x) == pytest.approx(expected)


def test_moment_examples():
    assert ft.kurtosis([1, -1, 1, -1]) == pytest.approx(1.0, abs=1e-12)
    assert ft.skewness([-2, -1, 0, 1, 2]) == pytest.approx(0.0, abs=1e-12)
    z = np.random.default_rng(1).standard_normal(100_000)
    assert ft.kurtosis(z) == pytest.approx(3.0, abs=0.1)


def test_moment_zero_variance_fallback():
    flags = set()
    assert ft.kurtosis([2.0] * 10, flags) == 0.0
    assert ft.skewness([2.0] * 10, flags) == 0.0
    assert flags == {"zero_variance"}


@settings(max_examples=60, deadline=None)
@given(st.lists(finite, min_size=5, max_size=60), st.floats(0.1, 50), st.floats(-100, 100))
def test_moments_affine_invariant(x, a, b):
    x = np.asarray(x)
    if np.std(x) < 1e-3 * (1 + np.max(np.abs(x))):
        return
    y = a * x + b
    assert ft.kurtosis(y) == pytest.approx(ft.kurtosis(x), rel=1e-9, abs=1e-9)
    assert ft.skewness(y) == pytest.approx(ft.skewness(x), rel=1e-9, abs=1e-9)


# -- entropy estimators against the oracles ------------------------------------

def test_apen_examples():
    assert ft.approx_entropy(np.full(50, 3.0)) == pytest.approx(0.0, abs=1e-9)
    alt = [1.0, 2.0] * 25
    assert ft.approx_entropy(alt) == pytest.approx(oracles.apen(alt), abs=1e-6)
    u = _uniform200()
    assert ft.approx_entropy(u) == pytest.approx(UNIFORM200_SEED3_APEN, abs=1e-9)
    assert ft.approx_entropy(u) > ft.approx_entropy(alt)


def test_sampen_examples():
    u = _uniform200()
    assert ft.kernels.sample_entropy_counts(u, 2, 0.2 * u.std()) == UNIFORM200_SEED3_SAMPEN_COUNTS
    assert ft.sample_entropy(u) == pytest.approx(UNIFORM200_SEED3_SAMPEN, abs=1e-12)
    flags = set()
    assert ft.sample_entropy(np.full(30, 1.0), flags=flags) == ft.SAMPEN_CLAMP
    assert "sampen_undefined" in flags


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=6, max_size=80))
def test_apen_sampen_match_bruteforce(x):
    x = np.asarray(x)
    if np.std(x) == 0:
        return
    assert ft.approx_entropy(x) == pytest.approx(oracles.apen(x.tolist()), abs=1e-9)
    assert ft.sample_entropy(x) == pytest.approx(oracles.sampen(x.tolist()), abs=1e-9)


def test_permutation_entropy():
    p3 = ft.EntropyParams(K=3)
    assert ft.perm_entropy(np.arange(30.0), p3) == 0.0
    assert ft.perm_entropy([1, 3, 2, 5, 4], ft.EntropyParams(K=2)) == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(st.lists(finite, min_size=4, max_size=100))
def test_permutation_entropy_bound_and_oracle(x):
    h = ft.perm_entropy(x)
    assert 0.0 <= h <= math.log2(6) + 1e-12
    assert h == pytest.approx(oracles.permen(x, 3), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-1000, 1000), min_size=4, max_size=60))
def test_permutation_entropy_monotone_invariant(x):
    # integer inputs keep these transforms exact, so ties are preserved too
    x = np.asarray(x, dtype=float)
    h = ft.perm_entropy(x)
    assert ft.perm_entropy(x ** 3 + 2 * x) == pytest.approx(h, abs=1e-12)
    assert ft.perm_entropy(7 * x - 3) == pytest.approx(h, abs=1e-12)
    assert ft.perm_entropy(np.arctan(x / 1000)) == pytest.approx(h, abs=1e-12)


def test_shannon_hr():
    assert ft.shannon_entropy_hr([70.0] * 8) == 0.0
    assert ft.shannon_entropy_hr([60.0, 120.0]) == pytest.approx(0.5)


@given(st.lists(st.floats(0.1, 300), min_size=1, max_size=50))
def test_shannon_nonnegative(x):
    assert ft.shannon_entropy_hr(x) >= 0.0


def test_higuchi_examples():
    assert ft.higuchi_fd(np.arange(200.0)) == pytest.approx(1.0, abs=0.05)
    noise = np.random.default_rng(5).standard_normal(1000)
    assert ft.higuchi_fd(noise) == pytest.approx(NOISE1000_SEED5_HFD, abs=1e-9)
    assert ft.higuchi_fd(noise) == pytest.approx(2.0, abs=0.15)
    sine = np.sin(2 * np.pi * np.arange(1000) / 50)
    assert 1.0 < ft.higuchi_fd(sine) < 1.5


def test_higuchi_short_series():
    with pytest.raises(SeriesTooShort):
        ft.higuchi_fd(np.arange(40.0))
    flags = set()
    v = ft.higuchi_fd(np.random.default_rng(0).standard_normal(12), strict=False, flags=flags)
    assert math.isfinite(v) and flags == {"hfd_short_series"}


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=80, max_size=200))
def test_higuchi_matches_bruteforce(x):
    if np.ptp(x) < 1e-3:
        return
    assert ft.higuchi_fd(np.asarray(x)) == pytest.approx(oracles.higuchi(x), abs=1e-2)


def test_hjorth():
    mob, _ = ft.hjorth(np.tile([1.0, -1.0], 1000))
    assert mob == pytest.approx(2.0, abs=1e-6)
    with pytest.raises(ZeroVariance):
        ft.hjorth(np.full(20, 4.0))
    rng = np.random.default_rng(9)
    noise = rng.standard_normal(1000)
    sine = np.sin(2 * np.pi * np.arange(1000) / 40)
    assert ft.hjorth(noise)[1] > ft.hjorth(sine)[1]
    x = rng.standard_normal(100)
    assert ft.hjorth(x) == pytest.approx(oracles.hjorth(x.tolist()), abs=1e-9)


def test_spectral_entropy():
    rng = np.random.default_rng(4)
    sine = np.sin(2 * np.pi * np.arange(512) * 8 / 512)
    noise = rng.standard_normal(512)
    assert ft.spectral_entropy(sine) < ft.spectral_entropy(noise)
    assert ft.spectral_entropy(np.zeros(16)) == 0.0


@given(st.lists(finite, min_size=8, max_size=100))
def test_spectral_entropy_bounds(x):
    assert 0.0 <= ft.spectral_entropy(x) <= 1.0


def test_pearson_and_resample():
    a = np.sin(np.linspace(0, 3, 40))
    assert ft.pearson(a, 3 * a + 1) == pytest.approx(1.0)
    assert ft.pearson(a, np.ones(40)) == 0.0
    assert ft.resample(np.arange(5.0), 9).tolist() == pytest.approx(np.linspace(0, 4, 9).tolist())


# -- feature blocks -------------------------------------------------------------

def test_hrv_constant():
    flags = set()
    out = ft.extract_hrv(np.full(12, 60.0), "basic11", flags=flags)
    assert list(out) == list(HRV_BASIC_NAMES)
    assert out["HR_max"] == out["HR_min"] == out["HR_mean"] == 60.0
    for k in ("HR_std", "HR_MaxDev", "HR_MAD", "HR_ShEn", "HR_PeEn", "HR_kurt", "HR_skew"):
        assert out[k] == 0.0
    assert "zero_variance" in flags


def test_hrv_extended_jittered():
    rng = np.random.default_rng(2)
    hr = 75 + rng.uniform(-5, 5, 40)
    out = ft.extract_hrv(hr, "extended16")
    assert list(out) == list(HRV_EXTENDED_NAMES)
    assert 70 <= out["HR_mean"] <= 80
    assert all(math.isfinite(v) for v in out.values())
    with pytest.raises(TooFewBeats):
        ft.extract_hrv([70, 71, 72], "basic11")


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(150, 800), min_size=5, max_size=25), st.integers(0, 10_000))
def test_hrv_shift_invariant_and_ordered(rr, shift):
    peaks = np.cumsum([0] + rr)
    a = ft.extract_hrv(ft.heart_rate_series(peaks, 500), "extended16")
    b = ft.extract_hrv(ft.heart_rate_series(peaks + shift, 500), "extended16")
    assert a == b
    assert a["HR_max"] >= a["HR_mean"] >= a["HR_min"]
    assert a["HR_MaxDev"] == pytest.approx(a["HR_max"] - a["HR_min"])


def _copies(template_len=60, n_beats=6, wave="p"):
    """Record with identical copies of one bump per beat and matching fiducials."""
    fs = 500
    period = 400
    n = period * n_beats + 200
    x = np.zeros(n)
    t = np.arange(template_len)
    bump = np.exp(-0.5 * ((t - template_len / 2) / (template_len / 6)) ** 2)
    beats = []
    for i in range(n_beats):
        start = 100 + i * period
        if wave == "p":
            x[start:start + template_len] += 0.2 * bump
            beats.append(Beat(r=start + 150, p_onset=start, p_peak=start + template_len // 2,
                              p_offset=start + template_len - 1, qrs_onset=start + 130,
                              qrs_offset=start + 170))
        else:
            x[start:start + template_len] += bump
            beats.append(Beat(r=start + template_len // 2, qrs_onset=start,
                              qrs_offset=start + template_len - 1))
    return EcgRecord("copies", fs, x), FiducialMap(tuple(beats), n)


def test_pwave_identical_copies():
    rec, fid = _copies(wave="p")
    out = ft.extract_pwave(rec, fid)
    assert out["P_Corr_mean"] == pytest.approx(1.0, abs=1e-9)
    assert out["P_Corr_std"] == pytest.approx(0.0, abs=1e-9)
    assert out["P_width_std"] == 0.0


def test_pwave_all_absent():
    beats = tuple(Beat(r=300 + 400 * i, qrs_onset=280 + 400 * i, qrs_offset=320 + 400 * i)
                  for i in range(6))
    rec = EcgRecord("noP", 500, np.random.default_rng(0).standard_normal(3000))
    flags = set()
    out = ft.extract_pwave(rec, FiducialMap(beats, 3000), flags=flags)
    assert set(out.values()) == {0.0} and len(out) == 18
    assert "no_p_waves" in flags


def test_pri_examples():
    def fid(pris_ms):
        beats = []
        for i, p in enumerate(pris_ms):
            q = 200 + 400 * i
            on = q - int(p * 500 / 1000)
            beats.append(Beat(r=q + 20, p_onset=on, p_peak=on + 10, p_offset=on + 20,
                              qrs_onset=q, qrs_offset=q + 40))
        return FiducialMap(tuple(beats), 400 * len(pris_ms) + 200)

    out = ft.extract_pri(fid([160] * 5), 500)
    assert out == {"PRI_mean": 160.0, "PRI_std": 0.0, "PRI_max": 160.0, "PRI_min": 160.0,
                   "PRI_MaxDev": 0.0}
    out = ft.extract_pri(fid([120, 200, 120, 200]), 500)
    assert (out["PRI_mean"], out["PRI_max"], out["PRI_min"], out["PRI_MaxDev"]) == (160, 200, 120, 80)


def test_qrs_identical_copies():
    rec, fid = _copies(template_len=45, wave="qrs")
    out = ft.extract_qrs(rec, fid)
    assert out["QRS_Corr_mean"] == pytest.approx(1.0, abs=1e-9)
    assert out["QRS_width_std"] == 0.0


def test_qrs_width_spread_grows_with_pvc():

    normal = clean(generate(RhythmScript(seed=8))[0])
    ectopic = clean(generate(RhythmScript(label=RhythmLabel.PVC, ectopic=(("PVC", 4),), seed=8))[0])
    w_normal = ft.extract_qrs(normal, delineate(normal))["QRS_width_std"]
    w_ectopic = ft.extract_qrs(ectopic, delineate(ectopic))["QRS_width_std"]
    assert w_ectopic > w_normal
