import numpy as np
import pytest

from ecgarrhythmia.delineate import DelineationConfig, delineate, detect_r_peaks
from ecgarrhythmia.domain import EcgRecord, RhythmLabel
from ecgarrhythmia.errors import NoBeatsDetected
from ecgarrhythmia.preprocess import clean
from ecgarrhythmia.synthgen import RhythmScript, generate, random_script

FS = 500


def _ms(n):
    return n * 1000.0 / FS


def _match(detected, truth, tol):
    detected = np.asarray(detected)
    return sum(bool(np.any(np.abs(detected - g) <= tol)) for g in truth)


def test_r_peaks_nsr_seed7():
    rec, truth = generate(RhythmScript(hr_bpm=75, duration_s=10, seed=7))
    rp = detect_r_peaks(clean(rec))
    assert 12 <= rp.size <= 13
    tol = int(0.020 * FS)
    gt = truth.r_peaks
    assert _match(rp, gt, tol) / gt.size >= 0.95
    assert _match(gt, rp, tol) / rp.size >= 0.95


def test_r_peak_preconditions():
    with pytest.raises(NoBeatsDetected):
        detect_r_peaks(EcgRecord("flat", FS, np.zeros(5000)))
    rec, _ = generate(RhythmScript(duration_s=1.5, seed=1))
    with pytest.raises(NoBeatsDetected):
        detect_r_peaks(rec)


def test_p_and_t_located_on_nsr():
    hits_p = hits_t = total = 0
    for seed in range(5):
        rec, truth = generate(random_script(RhythmLabel.NSR, 500 + seed))
        fid = delineate(clean(rec))
        gt = {b.r: b for b in truth.beats}
        for b in fid.beats:
            g = gt[min(gt, key=lambda r: abs(r - b.r))]
            total += 1
            hits_p += b.p_peak is not None and abs(_ms(b.p_peak - g.p_peak)) <= 50
            hits_t += b.t_peak is not None and abs(_ms(b.t_peak - g.t_peak)) <= 50
    assert hits_p / total >= 0.9
    assert hits_t / total >= 0.9


def test_af_without_p_waves_reports_absence():
    absent = total = 0
    for seed in range(5):
        rec, _ = generate(RhythmScript(label=RhythmLabel.AF, p_amplitude=0.0, hr_bpm=90,
                                       hr_jitter=0.2, seed=seed))
        fid = delineate(clean(rec))
        absent += sum(not b.has_p for b in fid.beats)
        total += len(fid)
    assert absent / total >= 0.7


def test_ordering_invariant_on_corpus(small_corpus):
    for rec, _ in small_corpus:
        fid = delineate(clean(rec))
        fid.validate()
        assert all(b.is_ordered() for b in fid.beats)


def test_offset_invariance_and_determinism():
    rec, _ = generate(RhythmScript(seed=3))
    x = clean(rec)
    a = delineate(x)
    assert delineate(x) == a
    shifted = x.with_samples(x.samples + 2.5)
    assert delineate(shifted) == a


def test_time_reversal_of_symmetric_beats():
    n = 5000
    t = np.arange(n)
    centers = [400, 1150, 1900, 2650, 3400, 4150]
    x = sum(np.exp(-0.5 * ((t - c) / 6.0) ** 2) for c in centers)
    rec = EcgRecord("sym", FS, x)
    fwd = detect_r_peaks(rec)
    rev = detect_r_peaks(rec.with_samples(x[::-1].copy()))
    assert fwd.tolist() == centers
    assert rev.tolist() == sorted(n - 1 - i for i in fwd)


def test_config_validation():
    with pytest.raises(ValueError):
        DelineationConfig(refractory_ms=50)
