"""R-peak detection and P/QRS/T delineation.

R-peaks come from a Pan-Tompkins style chain (5-15 Hz band-pass, derivative,
squaring, 150 ms moving-window integration, adaptive dual thresholds with
search-back). Wave boundaries use a slope threshold on a smoothed derivative.
All decisions compare differences or ratios, so adding a constant offset to
the input never changes the result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .domain import Beat, EcgRecord, FiducialMap
from .errors import NoBeatsDetected

MIN_DURATION_S = 2.0


@dataclass(frozen=True)
class DelineationConfig:
    qrs_window_ms: float = 80.0
    p_window_ms: tuple = (240.0, 40.0)  # (start, end) before QRS onset
    t_window_ms: tuple = (60.0, 400.0)  # (start, end) after QRS offset
    refractory_ms: float = 250.0
    slope_fraction: float = 0.1
    quiet_ms: float = 12.0
    p_noise_factor: float = 2.0
    p_min_relative: float = 0.04  # of the beat's R amplitude

    def __post_init__(self):
        if self.refractory_ms < 120:
            raise ValueError("refractory period must be at least 120 ms")
        if min(self.qrs_window_ms, *self.p_window_ms, *self.t_window_ms) <= 0:
            raise ValueError("search windows must be positive")


DEFAULT_CONFIG = DelineationConfig()


def _ms(ms, fs) -> int:
    return int(round(ms * fs / 1000.0))


def _moving_average(x, width):
    width = max(1, int(width) | 1)
    if width == 1:
        return np.asarray(x, dtype=float)
    return np.convolve(x, np.ones(width) / width, mode="same")


def qrs_energy(record: EcgRecord) -> np.ndarray:
    """Moving-window integral of the squared derivative of the 5-15 Hz band."""
    fs = record.fs_hz
    sos = signal.butter(2, [5.0, min(15.0, 0.45 * fs)], btype="bandpass", fs=fs, output="sos")
    y = signal.sosfiltfilt(sos, record.samples, padtype="odd", padlen=min(12, len(record) - 1))
    d = np.gradient(y) * fs
    return _moving_average(d ** 2, _ms(150.0, fs))


def _threshold_peaks(cands, heights, fs, refractory):
    """Classic SPKI/NPKI running thresholds with RR search-back."""
    init = heights[cands < 2 * fs]
    spki = (init.max() if init.size else heights.max()) / 3.0
    npki = np.median(heights) / 2.0 if heights.size else 0.0
    npki = min(npki, spki / 2.0)
    accepted: list[int] = []
    for j, (c, h) in enumerate(zip(cands, heights)):
        thr1 = npki + 0.25 * (spki - npki)
        if accepted and len(accepted) >= 2:
            rr = np.diff(accepted[-9:]).mean()
            if c - accepted[-1] > 1.66 * rr:
                # search-back between the last beat and this candidate
                lo = accepted[-1] + refractory
                mask = (cands > lo) & (cands < c - refractory) & (heights > 0.5 * thr1)
                if mask.any():
                    k = int(np.flatnonzero(mask)[np.argmax(heights[mask])])
                    accepted.append(int(cands[k]))
                    spki = 0.25 * heights[k] + 0.75 * spki
        if h > thr1 and (not accepted or c - accepted[-1] >= refractory):
            accepted.append(int(c))
            spki = 0.125 * h + 0.875 * spki
        else:
            npki = 0.125 * h + 0.875 * npki
    return accepted


def _refine(x, idx, half):
    """Move ``idx`` to the largest deviation from the local median until stable."""
    n = x.size
    r = idx
    for _ in range(6):
        lo, hi = max(0, r - half), min(n, r + half + 1)
        seg = x[lo:hi]
        j = lo + int(np.argmax(np.abs(seg - np.median(seg))))
        if j == r:
            break
        r = j
    return r


def detect_r_peaks(record: EcgRecord, config: DelineationConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Indices of R-peaks, strictly increasing and at least one refractory period apart."""
    fs = record.fs_hz
    if record.duration_s < MIN_DURATION_S:
        raise NoBeatsDetected(f"{record.id}: record shorter than {MIN_DURATION_S} s")
    x = record.samples
    if not np.all(np.isfinite(x)):
        raise NoBeatsDetected(f"{record.id}: non-finite samples")
    mwi = qrs_energy(record)
    top = float(mwi.max())
    if not top > 0 or np.ptp(x) == 0:
        raise NoBeatsDetected(f"{record.id}: flat signal")
    refractory = _ms(config.refractory_ms, fs)
    cands, _ = signal.find_peaks(mwi, distance=max(1, refractory // 2))
    cands = cands[mwi[cands] > 1e-6 * top]
    if cands.size == 0:
        raise NoBeatsDetected(f"{record.id}: no QRS candidates")
    accepted = _threshold_peaks(cands, mwi[cands], fs, refractory)
    half = _ms(50.0, fs)
    search = _ms(75.0, fs)
    peaks = []
    for c in accepted:
        lo, hi = max(0, c - search), min(x.size, c + search + 1)
        seg = x[lo:hi]
        start = lo + int(np.argmax(np.abs(seg - np.median(seg))))
        peaks.append(_refine(x, start, half))
    peaks = sorted(set(peaks))
    kept: list[int] = []
    for p in peaks:
        if kept and p - kept[-1] < refractory:
            # keep the larger deflection of the two
            local = np.median(x[max(0, p - search):p + search + 1])
            if abs(x[p] - local) > abs(x[kept[-1]] - local):
                kept[-1] = p
            continue
        kept.append(p)
    if len(kept) < 2:
        raise NoBeatsDetected(f"{record.id}: fewer than 2 beats detected")
    return np.asarray(kept, dtype=int)


# ---------------------------------------------------------------------------
# wave boundaries


def _quiet_left(d, start, stop, thr, run):
    """Walk left from ``start``; return the right end of the first quiet run of length ``run``."""
    count = 0
    for i in range(start, stop - 1, -1):
        if d[i] < thr:
            count += 1
            if count >= run:
                return i + run - 1
        else:
            count = 0
    return stop


def _quiet_right(d, start, stop, thr, run):
    count = 0
    for i in range(start, stop + 1):
        if d[i] < thr:
            count += 1
            if count >= run:
                return i - run + 1
        else:
            count = 0
    return stop


def _qrs_bounds(dq, r, lo, hi, cfg, fs):
    seg = dq[lo:hi + 1]
    peak = float(seg.max())
    if not peak > 0:
        return None, None
    thr = cfg.slope_fraction * peak
    run = max(2, _ms(cfg.quiet_ms, fs))
    on = _quiet_left(dq, r, lo, thr, run)
    off = _quiet_right(dq, r, hi, thr, run)
    return on, off


def _wave_peak(xs, lo, hi, base_lo, base_hi):
    """Largest deviation of ``xs[lo:hi]`` from the line through two baseline points."""
    idx = np.arange(lo, hi + 1)
    if base_hi == base_lo:
        line = np.full(idx.size, xs[base_lo])
    else:
        slope = (xs[base_hi] - xs[base_lo]) / (base_hi - base_lo)
        line = xs[base_lo] + slope * (idx - base_lo)
    dev = xs[lo:hi + 1] - line
    k = int(np.argmax(np.abs(dev)))
    return lo + k, float(dev[k])


def _edge_left(d, peak, lo, frac):
    """Onset: left of the steepest approach to ``peak``, where the slope falls below ``frac``."""
    if peak <= lo:
        return lo
    seg = d[lo:peak]
    j = lo + int(np.argmax(seg))
    thr = frac * d[j]
    i = j
    while i > lo and d[i] >= thr:
        i -= 1
    return i


def _edge_right(d, peak, hi, frac):
    if peak >= hi:
        return hi
    seg = d[peak + 1:hi + 1]
    j = peak + 1 + int(np.argmax(seg))
    thr = frac * d[j]
    i = j
    while i < hi and d[i] >= thr:
        i += 1
    return i


def _interior(k, lo, hi, edge):
    # a wave peak on the window boundary is the tail of a neighbouring wave
    return lo + edge <= k <= hi - edge


def _noise_mad(x, xs, lo, hi):
    res = x[lo:hi + 1] - xs[lo:hi + 1]
    return float(np.median(np.abs(res - np.median(res))))


def delineate(record: EcgRecord, r_peaks=None,
              config: DelineationConfig = DEFAULT_CONFIG) -> FiducialMap:
    """Locate P, QRS and T landmarks around each R-peak.

    A component whose detection criterion fails is left as ``None``.
    """
    fs = record.fs_hz
    x = np.asarray(record.samples, dtype=float)
    n = x.size
    if r_peaks is None:
        r_peaks = detect_r_peaks(record, config)
    r_peaks = np.asarray(r_peaks, dtype=int)
    if r_peaks.size < 2:
        raise NoBeatsDetected(f"{record.id}: fewer than 2 R-peaks")
    if np.any(np.diff(r_peaks) <= 0) or r_peaks[0] < 0 or r_peaks[-1] >= n:
        raise ValueError("r_peaks must be strictly increasing indices inside the record")

    dq = np.abs(np.gradient(_moving_average(x, _ms(8.0, fs))))
    xs_p = _moving_average(x, _ms(20.0, fs))
    dp = np.gradient(xs_p)
    xs_t = _moving_average(x, _ms(40.0, fs))
    dt = np.gradient(xs_t)
    qw = _ms(config.qrs_window_ms, fs)
    edge = max(1, _ms(6.0, fs))

    # QRS first: P and T windows depend on neighbouring QRS boundaries
    qrs = []
    for i, r in enumerate(r_peaks):
        lo = max(0, r - qw, (r_peaks[i - 1] + 1) if i else 0)
        hi = min(n - 1, r + qw, (r_peaks[i + 1] - 1) if i + 1 < r_peaks.size else n - 1)
        on, off = _qrs_bounds(dq, r, lo, hi, config, fs)
        if on is not None and not on <= r <= off:
            on = off = None
        qrs.append((on, off))

    beats = []
    prev_end = 0
    for i, r in enumerate(r_peaks):
        on, off = qrs[i]
        q_on = on if on is not None else r - _ms(40.0, fs)
        q_off = off if off is not None else r + _ms(40.0, fs)
        r_amp = abs(x[r] - np.median(x[max(0, r - qw):min(n, r + qw + 1)]))
        beat = dict(r=int(r), qrs_onset=on, qrs_offset=off)

        # P wave
        p_lo = max(q_on - _ms(config.p_window_ms[0], fs), prev_end, 0)
        p_hi = q_on - _ms(config.p_window_ms[1], fs)
        if p_hi - p_lo >= _ms(40.0, fs) and q_on > 0:
            pk, amp = _wave_peak(xs_p, p_lo, p_hi, p_lo, p_hi)
            noise = _noise_mad(x, xs_p, p_lo, q_on)
            if (_interior(pk, p_lo, p_hi, edge) and abs(amp) >= config.p_noise_factor * noise
                    and abs(amp) >= config.p_min_relative * r_amp):
                sgn = 1.0 if amp > 0 else -1.0
                p_on = _edge_left(sgn * dp, pk, max(prev_end, p_lo - _ms(60.0, fs), 0), config.slope_fraction)
                p_off = _edge_right(-sgn * dp, pk, q_on, config.slope_fraction)
                if p_on <= pk <= p_off <= q_on:
                    beat.update(p_onset=int(p_on), p_peak=int(pk), p_offset=int(p_off))

        # T wave
        nxt = r_peaks[i + 1] if i + 1 < r_peaks.size else n
        nxt_on = qrs[i + 1][0] if i + 1 < r_peaks.size and qrs[i + 1][0] is not None \
            else nxt - _ms(40.0, fs)
        t_lo = q_off + _ms(config.t_window_ms[0], fs)
        t_hi = min(q_off + _ms(config.t_window_ms[1], fs), nxt_on - 1, n - 1)
        t_end = q_off
        if t_hi - t_lo >= _ms(40.0, fs):
            base = max(q_off, 0)
            tp, amp = _wave_peak(xs_t, t_lo, t_hi, base, base)
            noise = _noise_mad(x, xs_t, t_lo, t_hi)
            if (_interior(tp, t_lo, t_hi, edge) and abs(amp) >= config.p_noise_factor * noise
                    and abs(amp) >= config.p_min_relative * r_amp):
                sgn = 1.0 if amp > 0 else -1.0
                t_off = _edge_right(-sgn * dt, tp, t_hi, config.slope_fraction)
                if off is not None and off <= tp <= t_off:
                    beat.update(t_peak=int(tp), t_offset=int(t_off))
                    t_end = t_off
        prev_end = max(t_end, q_off) + 1
        beats.append(Beat(**beat))

    fid = FiducialMap(tuple(beats), n)
    fid.validate()
    return fid
