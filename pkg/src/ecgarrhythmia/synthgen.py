"""Synthetic single-lead ECG with exact ground-truth fiducials.

Each beat is a sum of Gaussian bumps (P, Q, R, S, T) placed at integer sample
positions, so the ground-truth indices are exact by construction. Rhythm
classes differ in how beats are scheduled and which waves are present:

=====  ===============================================================
NSR    60-100 bpm, small RR jitter, PR 120-200 ms
SA     sinus beats with cyclic (respiratory) RR modulation
SB     sinus beats below 60 bpm
STACH  sinus beats above 100 bpm
AF     no P waves, irregular RR, low-amplitude fibrillatory baseline
AFL    no P waves, regular sawtooth flutter baseline, n:1 conduction
PAC    sinus rhythm with early beats carrying an altered P wave
1AVB   sinus rhythm with PR above 200 ms
PVC    sinus rhythm with early wide-QRS beats and a compensatory pause
=====  ===============================================================
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .domain import Beat, EcgRecord, FiducialMap, RhythmLabel
from .errors import InvalidScript

HALF_WIDTHS = 2.5  # bump extent in standard deviations used for onsets/offsets


@dataclass(frozen=True)
class RhythmScript:
    label: RhythmLabel = RhythmLabel.NSR
    hr_bpm: float = 75.0
    hr_jitter: float = 0.02
    p_amplitude: float = 0.15
    pr_ms: float = 160.0
    p_width_ms: float = 100.0
    qrs_ms: float = 90.0
    r_amplitude: float = 1.0
    t_amplitude: float = 0.3
    ectopic: tuple = ()  # (kind, beat_index) pairs, kind in {"PAC", "PVC"}
    sa_depth: float = 0.0
    sa_period_s: float = 4.0
    fwave_amplitude: float = 0.0
    flutter_bpm: float = 0.0
    flutter_amplitude: float = 0.0
    noise_std: float = 0.01
    baseline_amplitude: float = 0.0
    powerline_amplitude: float = 0.0
    fs_hz: float = 500.0
    duration_s: float = 10.0
    seed: int = 0
    record_id: str | None = None

    def validate(self) -> None:
        if not 20 <= self.hr_bpm <= 300:
            raise InvalidScript(f"hr_bpm {self.hr_bpm} outside [20, 300]")
        if not self.duration_s > 0 or not self.fs_hz > 0:
            raise InvalidScript("duration_s and fs_hz must be positive")
        if self.qrs_ms <= 0 or self.p_width_ms <= 0 or self.pr_ms < 0:
            raise InvalidScript("wave durations must be positive")
        for kind, _ in self.ectopic:
            if kind not in ("PAC", "PVC"):
                raise InvalidScript(f"unknown ectopic kind {kind!r}")


@dataclass
class _BeatPlan:
    r_time: float
    kind: str = "N"  # N, PAC, PVC, NOP (no P wave)
    pr_ms: float = 160.0
    p_scale: float = 1.0
    extra: dict = field(default_factory=dict)


def _gauss(t, center, sigma, amp):
    return amp * np.exp(-0.5 * ((t - center) / sigma) ** 2)


def _rr_series(script: RhythmScript, rng, n_max: int) -> np.ndarray:
    rr0 = 60.0 / script.hr_bpm
    lab = script.label
    if lab is RhythmLabel.AF:
        rr = rr0 * np.exp(rng.normal(0.0, max(script.hr_jitter, 0.12), n_max))
        return np.clip(rr, 0.3, 2.0)
    rr = rr0 * (1.0 + script.hr_jitter * rng.standard_normal(n_max))
    if script.sa_depth > 0:
        phase = rng.uniform(0, 2 * np.pi)
        t = np.cumsum(rr)
        rr = rr * (1.0 + script.sa_depth * np.sin(2 * np.pi * t / script.sa_period_s + phase))
    return np.clip(rr, 0.2, 3.0)


def _plan_beats(script: RhythmScript, rng) -> list[_BeatPlan]:
    dur = script.duration_s
    rr0 = 60.0 / script.hr_bpm
    n_max = int(dur / 0.2) + 4
    rr = _rr_series(script, rng, n_max)
    ectopic = dict((i, k) for k, i in script.ectopic)
    no_p = script.label in (RhythmLabel.AF, RhythmLabel.AFL) or script.p_amplitude <= 0
    plans: list[_BeatPlan] = []
    t = 0.3 + rng.uniform(0.0, rr0)
    i = 0
    while t <= dur - 0.05 and i < n_max:
        kind = ectopic.get(i, "NOP" if no_p else "N")
        plan = _BeatPlan(t, kind, script.pr_ms)
        if kind == "PAC":
            prev = plans[-1].r_time if plans else t - rr0
            plan.r_time = prev + rr0 * rng.uniform(0.6, 0.75)
            plan.pr_ms = rng.uniform(110.0, 150.0)
            plan.p_scale = rng.choice([-0.6, 0.6, 1.4])
        elif kind == "PVC":
            prev = plans[-1].r_time if plans else t - rr0
            plan.r_time = prev + rr0 * rng.uniform(0.55, 0.7)
            plan.extra = {
                "width": rng.uniform(140.0, 180.0),
                "sign": rng.choice([-1.0, 1.0]),
                "amp": rng.uniform(1.1, 1.6),
            }
        if plan.r_time > dur - 0.05:
            break
        plans.append(plan)
        if kind == "PVC":
            # compensatory pause: next sinus beat keeps the underlying schedule
            t = plans[-2].r_time + 2 * rr[i] if len(plans) > 1 else plan.r_time + 1.4 * rr[i]
        else:
            t = plan.r_time + rr[i]
        i += 1
    return plans


def generate(script: RhythmScript) -> tuple[EcgRecord, FiducialMap]:
    """Render a record and its ground-truth fiducials from ``script``."""
    script.validate()
    rng = np.random.default_rng(script.seed)
    fs = script.fs_hz
    n = int(round(script.duration_s * fs))
    t = np.arange(n) / fs
    x = np.zeros(n)
    beats = []
    for plan in _plan_beats(script, rng):
        beats.append(_render_beat(x, t, plan, script, fs, n))
    x += _atrial_baseline(script, t, rng)
    if script.baseline_amplitude > 0:
        f_bw = rng.uniform(0.1, 0.4)
        x += script.baseline_amplitude * np.sin(2 * np.pi * f_bw * t + rng.uniform(0, 2 * np.pi))
    if script.powerline_amplitude > 0:
        x += script.powerline_amplitude * np.sin(2 * np.pi * 50.0 * t + rng.uniform(0, 2 * np.pi))
    if script.noise_std > 0:
        x += rng.normal(0.0, script.noise_std, n)
    rid = script.record_id or f"{script.label.value}_{script.seed}"
    fid = FiducialMap(tuple(b for b in beats if b is not None), n)
    fid.validate()
    return EcgRecord(rid, fs, x, script.label), fid


def _idx(sec, fs):
    return int(round(sec * fs))


def _render_beat(x, t, plan: _BeatPlan, script: RhythmScript, fs, n) -> Beat | None:
    r = _idx(plan.r_time, fs)
    if not 0 <= r < n:
        return None
    tr = r / fs
    rr_scale = np.sqrt(min(max(60.0 / script.hr_bpm, 0.3), 1.6) / 0.8)
    if plan.kind == "PVC":
        w = plan.extra["width"] / 1000.0
        sign = plan.extra["sign"]
        amp = plan.extra["amp"] * script.r_amplitude
        x += _gauss(t, tr, w / 5.0, sign * amp)
        x += _gauss(t, tr + 0.3 * w, w / 7.0, -0.3 * sign * amp)
        t_sigma = 0.05
        t_center = tr + w / 2 + 0.06 + HALF_WIDTHS * t_sigma
        x += _gauss(t, t_center, t_sigma, -sign * 0.5 * amp)
        qrs_on, qrs_off = r - _idx(w / 2, fs), r + _idx(w / 2, fs)
        tp = _idx(t_center, fs)
        toff = tp + _idx(HALF_WIDTHS * t_sigma, fs)
        return _clip_beat(Beat(r=r, qrs_onset=qrs_on, qrs_offset=qrs_off,
                               t_peak=tp, t_offset=toff), n)
    w = script.qrs_ms / 1000.0
    ra = script.r_amplitude
    x += _gauss(t, tr - 0.3 * w, w / 12.0, -0.12 * ra)
    x += _gauss(t, tr, w / 10.0, ra)
    x += _gauss(t, tr + 0.3 * w, w / 12.0, -0.25 * ra)
    qrs_on, qrs_off = r - _idx(w / 2, fs), r + _idx(w / 2, fs)
    beat = dict(r=r, qrs_onset=qrs_on, qrs_offset=qrs_off)
    if plan.kind in ("N", "PAC"):
        p_sigma = script.p_width_ms / 1000.0 / (2 * HALF_WIDTHS)
        p_on = qrs_on - _idx(plan.pr_ms / 1000.0, fs)
        p_pk = p_on + _idx(HALF_WIDTHS * p_sigma, fs)
        p_off = p_pk + _idx(HALF_WIDTHS * p_sigma, fs)
        x += _gauss(t, p_pk / fs, p_sigma, script.p_amplitude * plan.p_scale)
        beat.update(p_onset=p_on, p_peak=p_pk, p_offset=p_off)
    t_sigma = 0.04 * rr_scale
    t_pk = qrs_off + _idx(0.06 * rr_scale + HALF_WIDTHS * t_sigma, fs)
    x += _gauss(t, t_pk / fs, t_sigma, script.t_amplitude)
    beat.update(t_peak=t_pk, t_offset=t_pk + _idx(HALF_WIDTHS * t_sigma, fs))
    return _clip_beat(Beat(**beat), n)


def _clip_beat(beat: Beat, n: int) -> Beat:
    d = beat.to_dict()
    if d["p_onset"] is not None and (d["p_onset"] < 0 or d["p_offset"] >= n):
        d["p_onset"] = d["p_peak"] = d["p_offset"] = None
    if d["qrs_onset"] is not None and (d["qrs_onset"] < 0 or d["qrs_offset"] >= n):
        d["qrs_onset"] = d["qrs_offset"] = None
    if d["t_peak"] is not None and d["t_offset"] >= n:
        d["t_peak"] = d["t_offset"] = None
    return Beat(**d)


def _atrial_baseline(script: RhythmScript, t, rng) -> np.ndarray:
    out = np.zeros_like(t)
    if script.fwave_amplitude > 0:
        for _ in range(3):
            f = rng.uniform(4.0, 9.0)
            phase = np.cumsum(2 * np.pi * f * (1 + 0.1 * rng.standard_normal(t.size)) / script.fs_hz)
            out += script.fwave_amplitude / 3 * np.sin(phase + rng.uniform(0, 2 * np.pi))
    if script.flutter_amplitude > 0 and script.flutter_bpm > 0:
        f = script.flutter_bpm / 60.0
        frac = (t * f + rng.uniform()) % 1.0
        # negative sawtooth: slow descent, fast return
        out += script.flutter_amplitude * (np.where(frac < 0.8, -frac / 0.8, (frac - 0.8) / 0.2 - 1.0) + 0.5)
    return out


# ---------------------------------------------------------------------------
# per-class randomised scripts


def random_script(label: RhythmLabel, seed: int, **overrides) -> RhythmScript:
    """Draw a script for ``label`` with morphology and noise varied per record."""
    rng = np.random.default_rng(seed)
    common = dict(
        label=label,
        hr_jitter=rng.uniform(0.01, 0.03),
        p_amplitude=rng.uniform(0.1, 0.25),
        pr_ms=rng.uniform(120.0, 200.0),
        p_width_ms=rng.uniform(80.0, 110.0),
        qrs_ms=rng.uniform(70.0, 105.0),
        r_amplitude=rng.uniform(0.8, 1.6),
        t_amplitude=rng.uniform(0.15, 0.4),
        noise_std=rng.uniform(0.005, 0.02),
        baseline_amplitude=rng.uniform(0.0, 0.15),
        powerline_amplitude=rng.uniform(0.0, 0.05),
        seed=int(rng.integers(2 ** 31)),
    )
    hr = rng.uniform(62.0, 98.0)
    L = RhythmLabel
    if label is L.SB:
        hr = rng.uniform(40.0, 57.0)
    elif label is L.STACH:
        hr = rng.uniform(103.0, 150.0)
    elif label is L.SA:
        common.update(sa_depth=rng.uniform(0.12, 0.25), sa_period_s=rng.uniform(3.0, 6.0))
    elif label is L.AF:
        hr = rng.uniform(70.0, 130.0)
        common.update(hr_jitter=rng.uniform(0.15, 0.3), p_amplitude=0.0,
                      fwave_amplitude=rng.uniform(0.02, 0.06))
    elif label is L.AFL:
        flutter = rng.uniform(250.0, 350.0)
        ratio = int(rng.choice([2, 3, 4]))
        hr = flutter / ratio
        common.update(p_amplitude=0.0, flutter_bpm=flutter, hr_jitter=rng.uniform(0.0, 0.01),
                      flutter_amplitude=rng.uniform(0.08, 0.2))
    elif label is L.AVB1:
        common.update(pr_ms=rng.uniform(215.0, 280.0))
    elif label in (L.PAC, L.PVC):
        n_beats = int(hr / 60.0 * 10.0)
        k = int(rng.integers(1, 4))
        idx = sorted(rng.choice(np.arange(2, max(n_beats - 1, 4)), size=k, replace=False).tolist())
        common.update(ectopic=tuple((label.value, int(i)) for i in idx))
    common.update(hr_bpm=float(hr))
    common.update(overrides)
    return RhythmScript(**common)


def make_corpus(n_per_class: int = 100, seed: int = 13, labels=None):
    """Generate ``n_per_class`` records for each label; returns (record, truth) pairs."""
    labels = list(labels or RhythmLabel)
    seeds = np.random.SeedSequence(seed).spawn(len(labels))
    out = []
    for lab, ss in zip(labels, seeds):
        rng = np.random.default_rng(ss)
        for i in range(n_per_class):
            sc = random_script(lab, int(rng.integers(2 ** 31)),
                               record_id=f"{lab.value}_{i:04d}")
            out.append(generate(sc))
    return out


def with_seed(script: RhythmScript, seed: int) -> RhythmScript:
    return replace(script, seed=seed)
