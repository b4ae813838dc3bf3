"""HRV statistics and P-wave / PR-interval / QRS morphology features.

Estimators that hit a degenerate input (zero variance, no template matches)
return a documented fallback and, when a ``flags`` set is passed, record why.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import kernels
from .domain import (
    HRV_BASIC_NAMES,
    HRV_EXTENDED_NAMES,
    PRI_NAMES,
    PWAVE_NAMES,
    QRS_NAMES,
    EcgRecord,
    FiducialMap,
)
from .errors import (
    EmptySeries,
    NoBeatsDetected,
    SeriesTooShort,
    TooFewBeats,
    ZeroVariance,
)

SAMPEN_CLAMP = 10.0
CORR_POINTS = 64


@dataclass(frozen=True)
class EntropyParams:
    """Estimator parameters.

    m : embedding dimension for ApEn / SampEn
    r : tolerance as a fraction of the series' standard deviation
    K : permutation-entropy order
    kmax : largest Higuchi interval
    """

    m: int = 2
    r: float = 0.2
    K: int = 3
    kmax: int = 8

    def __post_init__(self):
        if self.m < 1 or self.r <= 0 or not 2 <= self.K <= 7 or self.kmax < 2:
            raise ValueError(f"invalid entropy parameters {self}")


DEFAULT_PARAMS = EntropyParams()


def _flag(flags, name):
    if flags is not None:
        flags.add(name)


# ---------------------------------------------------------------------------
# heart rate


def heart_rate_series(r_peaks, fs_hz: float) -> np.ndarray:
    """Instantaneous heart rate in bpm, ``60 * fs / RR`` for each RR interval."""
    r = np.asarray(r_peaks, dtype=float)
    if r.size < 2:
        raise NoBeatsDetected(f"need at least 2 R-peaks, got {r.size}")
    rr = np.diff(r)
    if np.any(rr <= 0):
        raise ValueError("r_peaks must be strictly increasing")
    return 60.0 * fs_hz / rr


# ---------------------------------------------------------------------------
# statistical primitives


def mean_abs_diff(x) -> float:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise SeriesTooShort("mean_abs_diff needs at least 2 values")
    return float(np.mean(np.abs(np.diff(x))))


def _central_moments(x):
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise SeriesTooShort("moments need at least 2 values")
    d = x - x.mean()
    return np.mean(d ** 2), np.mean(d ** 3), np.mean(d ** 4)


def _zero_variance(m2, x) -> bool:
    scale = max(float(np.max(np.abs(x))), 1e-300)
    return m2 <= (1e-12 * scale) ** 2


def kurtosis(x, flags=None) -> float:
    """Population (non-excess) kurtosis ``m4 / m2**2``; 0 for a constant series."""
    m2, _, m4 = _central_moments(x)
    if _zero_variance(m2, x):
        _flag(flags, "zero_variance")
        return 0.0
    return float(m4 / m2 ** 2)


def skewness(x, flags=None) -> float:
    """Population skewness ``m3 / m2**1.5``; 0 for a constant series."""
    m2, m3, _ = _central_moments(x)
    if _zero_variance(m2, x):
        _flag(flags, "zero_variance")
        return 0.0
    return float(m3 / m2 ** 1.5)


def approx_entropy(x, params: EntropyParams = DEFAULT_PARAMS) -> float:
    """Approximate entropy with self-matches counted and Chebyshev distance ``<= r``.

    ``r`` is ``params.r`` times the population standard deviation of ``x``.
    """
    x = np.ascontiguousarray(x, dtype=float)
    if x.size < params.m + 2:
        raise SeriesTooShort(f"ApEn needs at least {params.m + 2} values, got {x.size}")
    return float(kernels.approx_entropy(x, params.m, params.r * float(np.std(x))))


def sample_entropy(x, params: EntropyParams = DEFAULT_PARAMS, flags=None) -> float:
    """Sample entropy ``-ln(A/B)``; self-matches excluded, matches are distance ``< r``.

    When A or B is zero the estimate is undefined and ``SAMPEN_CLAMP`` is returned.
    """
    x = np.ascontiguousarray(x, dtype=float)
    if x.size < params.m + 2:
        raise SeriesTooShort(f"SampEn needs at least {params.m + 2} values, got {x.size}")
    a, b = kernels.sample_entropy_counts(x, params.m, params.r * float(np.std(x)))
    if a == 0 or b == 0:
        _flag(flags, "sampen_undefined")
        return SAMPEN_CLAMP
    return float(min(-math.log(a / b), SAMPEN_CLAMP))


def ordinal_patterns(x, K: int) -> np.ndarray:
    """Index of the ordinal pattern of every length-K window (delay 1).

    Ties are ranked by position (stable sort).
    """
    w = np.lib.stride_tricks.sliding_window_view(np.asarray(x, dtype=float), K)
    ranks = np.argsort(w, axis=1, kind="stable")
    lookup = {p: i for i, p in enumerate(permutations(range(K)))}
    return np.array([lookup[tuple(r)] for r in ranks.tolist()], dtype=int)


def perm_entropy(x, params: EntropyParams = DEFAULT_PARAMS) -> float:
    """Permutation entropy in bits over ordinal patterns of order K."""
    x = np.asarray(x, dtype=float)
    K = params.K
    if x.size < K + 1:
        raise SeriesTooShort(f"PeEn needs at least {K + 1} values, got {x.size}")
    counts = np.bincount(ordinal_patterns(x, K))
    p = counts[counts > 0] / counts.sum()
    return float(max(0.0, -np.sum(p * np.log2(p))))


def shannon_entropy_norm(x) -> float:
    """``-sum(v * log2 v)`` with ``v = x / max(x)``; zero entries contribute 0."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise EmptySeries("Shannon entropy of an empty series")
    top = np.max(x)
    if not top > 0:
        raise ValueError("Shannon entropy needs max(x) > 0")
    v = x / top
    v = v[v > 0]
    return float(max(0.0, -np.sum(v * np.log2(v))))


def shannon_entropy_hr(hr) -> float:
    return shannon_entropy_norm(hr)


def higuchi_fd(x, params: EntropyParams = DEFAULT_PARAMS, *, strict: bool = True, flags=None) -> float:
    """Higuchi fractal dimension over intervals ``k = 1..kmax``.

    With ``strict`` the series must hold at least ``10 * kmax`` values.
    Otherwise ``kmax`` shrinks to ``len(x) // 2`` (needs ``len(x) >= 4``).
    A series of zero curve length returns 0.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    kmax = params.kmax
    if strict:
        if n < 10 * kmax:
            raise SeriesTooShort(f"Higuchi FD needs {10 * kmax} values, got {n}")
    else:
        if n < 4:
            raise SeriesTooShort(f"Higuchi FD needs at least 4 values, got {n}")
        if n < 10 * kmax:
            _flag(flags, "hfd_short_series")
        kmax = max(2, min(kmax, n // 2))
    ks = np.arange(1, kmax + 1)
    lengths = np.empty(kmax)
    for j, k in enumerate(ks):
        lm = []
        for m in range(k):
            sub = x[m::k]
            cnt = sub.size - 1
            if cnt < 1:
                continue
            norm = (n - 1) / (cnt * k)
            lm.append(np.sum(np.abs(np.diff(sub))) * norm / k)
        lengths[j] = np.mean(lm)
    if np.any(lengths <= 0):
        _flag(flags, "zero_variance")
        return 0.0
    slope = np.polyfit(np.log(ks), np.log(lengths), 1)[0]
    return float(-slope)


def hjorth(x) -> tuple[float, float]:
    """Hjorth mobility and complexity using first differences as derivatives."""
    x = np.asarray(x, dtype=float)
    if x.size < 3:
        raise SeriesTooShort("Hjorth parameters need at least 3 values")
    d1 = np.diff(x)
    d2 = np.diff(d1)
    s0, s1, s2 = np.std(x), np.std(d1), np.std(d2)
    if _zero_variance(s0 ** 2, x) or s1 == 0:
        raise ZeroVariance("Hjorth parameters undefined for zero variance")
    mobility = s1 / s0
    return float(mobility), float((s2 / s1) / mobility)


def spectral_entropy(x) -> float:
    """Normalised Shannon entropy of the periodogram of ``x``.

    ``x`` is zero-padded to the next power of two; the entropy (bits) is divided
    by ``log2`` of the number of one-sided bins, so the result lies in [0, 1].
    A segment with no power returns 0.
    """
    x = np.asarray(x, dtype=float)
    if x.size < 8:
        raise SeriesTooShort(f"spectral entropy needs at least 8 values, got {x.size}")
    nfft = 1 << (x.size - 1).bit_length()
    psd = np.abs(np.fft.rfft(x, nfft)) ** 2
    total = psd.sum()
    if not total > 0:
        return 0.0
    p = psd / total
    nz = p[p > 0]
    return float(np.clip(-np.sum(nz * np.log2(nz)) / np.log2(psd.size), 0.0, 1.0))


def pearson(a, b) -> float:
    """Pearson correlation; 0 when either input is constant."""
    a = np.asarray(a, dtype=float) - np.mean(a)
    b = np.asarray(b, dtype=float) - np.mean(b)
    den = math.sqrt(float(np.dot(a, a)) * float(np.dot(b, b)))
    if den == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / den, -1.0, 1.0))


def resample(x, n: int = CORR_POINTS) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size == 1:
        return np.full(n, x[0])
    return np.interp(np.linspace(0, x.size - 1, n), np.arange(x.size), x)


# ---------------------------------------------------------------------------
# feature blocks


def extract_hrv(hr, mode: str = "basic11", params: EntropyParams = DEFAULT_PARAMS,
                flags=None) -> dict[str, float]:
    """HRV block: 11 values (``basic11``) or 16 (``extended16``)."""
    hr = np.asarray(hr, dtype=float)
    if mode not in ("basic11", "extended16"):
        raise ValueError(f"unknown HRV mode {mode!r}")
    if hr.size < 4:
        raise TooFewBeats(f"HRV features need at least 4 HR values, got {hr.size}")
    out = {
        "HR_max": float(hr.max()),
        "HR_min": float(hr.min()),
        "HR_mean": float(hr.mean()),
        "HR_std": float(hr.std()),
        "HR_MaxDev": float(hr.max() - hr.min()),
        "HR_MAD": mean_abs_diff(hr),
        "HR_kurt": kurtosis(hr, flags),
        "HR_skew": skewness(hr, flags),
        "HR_ApEn": approx_entropy(hr, params),
        "HR_ShEn": shannon_entropy_hr(hr),
        "HR_PeEn": perm_entropy(hr, params),
    }
    if mode == "basic11":
        return {k: out[k] for k in HRV_BASIC_NAMES}
    absdiff = np.abs(np.diff(hr))
    out["HR_stdAbsDiff"] = float(absdiff.std())
    out["HR_CoV"] = float(hr.std() / hr.mean())
    out["HR_HFD"] = higuchi_fd(hr, params, strict=False, flags=flags)
    try:
        out["HR_HM"], out["HR_HC"] = hjorth(hr)
    except ZeroVariance:
        _flag(flags, "zero_variance")
        out["HR_HM"] = out["HR_HC"] = 0.0
    return {k: out[k] for k in HRV_EXTENDED_NAMES}


def _mean_std(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return 0.0, 0.0
    return float(v.mean()), float(v.std())


def _segment(x, start, stop):
    return np.asarray(x[start:stop + 1], dtype=float)


def _consecutive(beats, has) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(len(beats) - 1) if has(beats[i]) and has(beats[i + 1])]


def extract_pwave(record: EcgRecord, fiducials: FiducialMap,
                  params: EntropyParams = DEFAULT_PARAMS, flags=None) -> dict[str, float]:
    """Mean and standard deviation over beats of nine P-wave descriptors (18 values).

    Beats without a delineated P wave (or with fewer than 8 samples in it) are
    skipped. When fewer than two P waves remain, all 18 values are 0 and the
    ``no_p_waves`` flag is raised.
    """
    if len(fiducials) < 2:
        raise TooFewBeats("P-wave features need at least 2 beats")
    x = record.samples
    fs = record.fs_hz
    beats = list(fiducials.beats)

    def usable(b):
        return b.has_p and b.p_offset - b.p_onset + 1 >= 8

    present = [b for b in beats if usable(b)]
    if len(present) < 2:
        _flag(flags, "no_p_waves")
        return dict.fromkeys(PWAVE_NAMES, 0.0)
    per_beat = {k: [] for k in ("peak", "width", "MaxDev", "energy", "SpEn", "kurt", "skew")}
    for b in present:
        seg = _segment(x, b.p_onset, b.p_offset)
        per_beat["peak"].append(x[b.p_peak])
        per_beat["width"].append((b.p_offset - b.p_onset) * 1000.0 / fs)
        per_beat["MaxDev"].append(seg.max() - seg.min())
        per_beat["energy"].append(float(np.sum(seg ** 2)))
        per_beat["SpEn"].append(spectral_entropy(seg))
        per_beat["kurt"].append(kurtosis(seg, flags))
        per_beat["skew"].append(skewness(seg, flags))
    pairs = _consecutive(beats, usable)
    corr = [pearson(resample(_segment(x, beats[i].p_onset, beats[i].p_offset)),
                    resample(_segment(x, beats[j].p_onset, beats[j].p_offset)))
            for i, j in pairs]
    atrial = [60.0 * fs / (beats[j].p_peak - beats[i].p_peak) for i, j in pairs
              if beats[j].p_peak > beats[i].p_peak]
    if not pairs:
        _flag(flags, "no_consecutive_p")
    stats = {
        "peak": per_beat["peak"], "width": per_beat["width"], "MaxDev": per_beat["MaxDev"],
        "energy": per_beat["energy"], "Corr": corr, "SpEn": per_beat["SpEn"],
        "kurt": per_beat["kurt"], "skew": per_beat["skew"], "atrialHR": atrial,
    }
    out = {}
    for base, vals in stats.items():
        out[f"P_{base}_mean"], out[f"P_{base}_std"] = _mean_std(vals)
    return {k: out[k] for k in PWAVE_NAMES}


def extract_pri(fiducials: FiducialMap, fs_hz: float, flags=None) -> dict[str, float]:
    """PR-interval statistics in milliseconds over beats with P onset and QRS onset."""
    pri = [(b.qrs_onset - b.p_onset) * 1000.0 / fs_hz for b in fiducials.beats
           if b.p_onset is not None and b.qrs_onset is not None]
    if len(pri) < 2:
        _flag(flags, "no_pri")
        return dict.fromkeys(PRI_NAMES, 0.0)
    v = np.asarray(pri)
    return {
        "PRI_mean": float(v.mean()),
        "PRI_std": float(v.std()),
        "PRI_max": float(v.max()),
        "PRI_min": float(v.min()),
        "PRI_MaxDev": float(v.max() - v.min()),
    }


def extract_qrs(record: EcgRecord, fiducials: FiducialMap,
                params: EntropyParams = DEFAULT_PARAMS, flags=None) -> dict[str, float]:
    """Mean and standard deviation over beats of seven QRS descriptors (14 values)."""
    if len(fiducials) < 2:
        raise TooFewBeats("QRS features need at least 2 beats")
    x = record.samples
    fs = record.fs_hz
    beats = list(fiducials.beats)

    def usable(b):
        return b.has_qrs and b.qrs_offset - b.qrs_onset + 1 >= 8

    present = [b for b in beats if usable(b)]
    if len(present) < 2:
        _flag(flags, "no_qrs")
        return dict.fromkeys(QRS_NAMES, 0.0)
    per_beat = {k: [] for k in ("width", "energy", "SpEn", "SaEn", "kurt", "skew")}
    for b in present:
        seg = _segment(x, b.qrs_onset, b.qrs_offset)
        per_beat["width"].append((b.qrs_offset - b.qrs_onset) * 1000.0 / fs)
        per_beat["energy"].append(float(np.sum(seg ** 2)))
        per_beat["SpEn"].append(spectral_entropy(seg))
        per_beat["SaEn"].append(sample_entropy(seg, params, flags))
        per_beat["kurt"].append(kurtosis(seg, flags))
        per_beat["skew"].append(skewness(seg, flags))
    corr = [pearson(resample(_segment(x, beats[i].qrs_onset, beats[i].qrs_offset)),
                    resample(_segment(x, beats[j].qrs_onset, beats[j].qrs_offset)))
            for i, j in _consecutive(beats, usable)]
    stats = {
        "width": per_beat["width"], "Corr": corr, "energy": per_beat["energy"],
        "SpEn": per_beat["SpEn"], "SaEn": per_beat["SaEn"], "kurt": per_beat["kurt"],
        "skew": per_beat["skew"],
    }
    out = {}
    for base, vals in stats.items():
        out[f"QRS_{base}_mean"], out[f"QRS_{base}_std"] = _mean_std(vals)
    return {k: out[k] for k in QRS_NAMES}
