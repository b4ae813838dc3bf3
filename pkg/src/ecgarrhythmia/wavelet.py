"""Stationary (undecimated, a trous) wavelet transform and sub-band features.

Conventions
-----------
Level ``j`` filters are the base filters upsampled by ``s = 2**(j-1)`` and
applied as circular convolutions::

    A_j[n] = sum_k lo[k] * A_{j-1}[(n - k*s) mod N]
    D_j[n] = sum_k hi[k] * A_{j-1}[(n - k*s) mod N]

For an orthonormal filter bank (haar, db6, coif2, sym7) this gives, per level,
``||A_{j-1}||^2 = (||A_j||^2 + ||D_j||^2) / 2``, hence::

    ||x||^2 = sum_j 2**-j * ||D_j||^2 + 2**-L * ||A_L||^2

bior4.4 is biorthogonal and does not conserve energy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._filterbank import FILTER_BANKS
from .domain import WAVELET_LEVELS, WAVELET_NAMES
from .errors import (
    EmptySeries,
    LengthNotAligned,
    LevelOutOfRange,
    UnknownWavelet,
    ZeroTotalEnergy,
)
from .features_time import (
    DEFAULT_PARAMS,
    EntropyParams,
    approx_entropy,
    kurtosis,
    perm_entropy,
    shannon_entropy_norm,
    skewness,
)

DEFAULT_LEVELS = 7
LOG_EPS = 1e-12
APEN_MAX_POINTS = 512
WAVELETS = ("haar", "db6", "coif2", "bior4.4", "sym7")


@dataclass(frozen=True)
class WaveletSpec:
    name: str
    dec_lo: np.ndarray = field(repr=False)
    dec_hi: np.ndarray = field(repr=False)
    rec_lo: np.ndarray = field(repr=False)
    rec_hi: np.ndarray = field(repr=False)
    levels: int = DEFAULT_LEVELS

    @property
    def length(self) -> int:
        return self.dec_lo.size

    def check_perfect_reconstruction(self, tol: float = 1e-10) -> float:
        """Max deviation of ``lo*rlo + hi*rhi`` from ``2 * delta[L-1]``."""
        s = np.convolve(self.dec_lo, self.rec_lo) + np.convolve(self.dec_hi, self.rec_hi)
        target = np.zeros_like(s)
        target[self.length - 1] = 2.0
        err = float(np.max(np.abs(s - target)))
        if err > tol:
            raise ValueError(f"{self.name}: filter bank fails perfect reconstruction ({err:.3g})")
        return err


def _canonical_name(name: str) -> str:
    key = name.strip().lower().replace("_", ".")
    if key == "bior4.4" or key == "bior44":
        return "bior4.4"
    return key


def get_wavelet(name: str, levels: int = DEFAULT_LEVELS) -> WaveletSpec:
    """Look up a filter bank by name (``bior4_4`` is accepted for ``bior4.4``)."""
    key = _canonical_name(name)
    if key not in FILTER_BANKS:
        raise UnknownWavelet(f"unknown wavelet {name!r}; choose from {', '.join(WAVELETS)}")
    arrays = [np.asarray(a, dtype=float) for a in FILTER_BANKS[key]]
    for a in arrays:
        a.setflags(write=False)
    spec = WaveletSpec(key, *arrays, levels=levels)
    spec.check_perfect_reconstruction()
    return spec


@dataclass(frozen=True)
class WaveletDecomposition:
    details: tuple  # D1..DL
    approx: np.ndarray  # A_L
    fs_hz: float
    wavelet: str

    @property
    def levels(self) -> int:
        return len(self.details)

    def detail(self, level: int) -> np.ndarray:
        if not 1 <= level <= self.levels:
            raise LevelOutOfRange(f"detail level {level} not in 1..{self.levels}")
        return self.details[level - 1]


def _circ_filter(a: np.ndarray, taps: np.ndarray, step: int) -> np.ndarray:
    out = np.zeros_like(a)
    for k, h in enumerate(taps):
        if h != 0.0:
            out += h * np.roll(a, k * step)
    return out


def swt(samples, spec: WaveletSpec | str = "sym7", levels: int | None = None,
        fs_hz: float = 500.0) -> WaveletDecomposition:
    """Multi-level SWT; every output sequence has the input's length."""
    if isinstance(spec, str):
        spec = get_wavelet(spec)
    levels = spec.levels if levels is None else levels
    x = np.asarray(samples, dtype=float)
    if x.size == 0 or x.size % (1 << levels):
        raise LengthNotAligned(
            f"length {x.size} is not a multiple of 2**{levels}; pad with pad_to_multiple")
    a = x
    details = []
    for j in range(levels):
        step = 1 << j
        details.append(_circ_filter(a, spec.dec_hi, step))
        a = _circ_filter(a, spec.dec_lo, step)
    return WaveletDecomposition(tuple(details), a, fs_hz, spec.name)


def iswt(decomp: WaveletDecomposition, spec: WaveletSpec | str | None = None) -> np.ndarray:
    """Inverse of :func:`swt`."""
    spec = get_wavelet(decomp.wavelet) if spec is None else spec
    if isinstance(spec, str):
        spec = get_wavelet(spec)
    a = decomp.approx
    delay = spec.length - 1
    for j in reversed(range(decomp.levels)):
        step = 1 << j
        merged = _circ_filter(a, spec.rec_lo, step) + _circ_filter(decomp.details[j], spec.rec_hi, step)
        a = 0.5 * np.roll(merged, -delay * step)
    return a


def band_range(level: int, fs_hz: float, approximation: bool = False) -> tuple[float, float]:
    """Nominal frequency band of detail ``level`` (or of the approximation at ``level``)."""
    if not 1 <= level <= DEFAULT_LEVELS:
        raise LevelOutOfRange(f"level {level} not in 1..{DEFAULT_LEVELS}")
    if approximation:
        return 0.0, fs_hz / 2 ** (level + 1)
    return fs_hz / 2 ** (level + 1), fs_hz / 2 ** level


def log_energy_entropy(coeffs) -> float:
    """``sum(ln(c**2 + eps))`` with ``eps = 1e-12``."""
    c = np.asarray(coeffs, dtype=float)
    if c.size == 0:
        raise EmptySeries("log-energy entropy of an empty sequence")
    return float(np.sum(np.log(c ** 2 + LOG_EPS)))


def _level_energies(decomp: WaveletDecomposition, levels=WAVELET_LEVELS) -> dict[int, float]:
    return {lvl: float(np.sum(decomp.detail(lvl) ** 2)) for lvl in levels}


def relative_wavelet_energy(decomp: WaveletDecomposition, level: int) -> float:
    """Energy of ``level`` over the summed energy of the feature levels D3..D7."""
    if level not in WAVELET_LEVELS:
        raise LevelOutOfRange(f"RWE is defined on levels {WAVELET_LEVELS}, got {level}")
    energies = _level_energies(decomp)
    total = sum(energies.values())
    if not total > 0:
        raise ZeroTotalEnergy("feature levels carry no energy")
    return energies[level] / total


def mean_wavelet_energy(decomp: WaveletDecomposition, level: int) -> float:
    c = decomp.detail(level)
    return float(np.sum(c ** 2) / c.size)


def subsample(c, max_points: int = APEN_MAX_POINTS) -> np.ndarray:
    """Every ``ceil(N / max_points)``-th value."""
    c = np.asarray(c)
    step = -(-c.size // max_points)
    return c[::step]


def extract_wavelet_features(decomp: WaveletDecomposition,
                             params: EntropyParams = DEFAULT_PARAMS,
                             flags=None) -> dict[str, float]:
    """Ten statistics for each of D3..D7 (50 values).

    A decomposition with no energy in D3..D7 yields all zeros and the
    ``zero_wavelet_energy`` flag.
    """
    if decomp.levels < max(WAVELET_LEVELS):
        raise LevelOutOfRange(f"need {max(WAVELET_LEVELS)} levels, got {decomp.levels}")
    energies = _level_energies(decomp)
    total = sum(energies.values())
    if not total > 0:
        if flags is not None:
            flags.add("zero_wavelet_energy")
        return dict.fromkeys(WAVELET_NAMES, 0.0)
    out = {}
    for lvl in WAVELET_LEVELS:
        c = decomp.detail(lvl)
        p = f"D{lvl}_"
        out[p + "mean"] = float(c.mean())
        out[p + "std"] = float(c.std())
        out[p + "skew"] = skewness(c, flags)
        out[p + "kurt"] = kurtosis(c, flags)
        out[p + "ApEn"] = approx_entropy(subsample(c), params)
        mag = np.abs(c)
        out[p + "ShEn"] = shannon_entropy_norm(mag) if mag.max() > 0 else 0.0
        out[p + "PeEn"] = perm_entropy(c, params)
        out[p + "LEEn"] = log_energy_entropy(c)
        out[p + "RWE"] = energies[lvl] / total
        out[p + "MWE"] = energies[lvl] / c.size
    return {k: out[k] for k in WAVELET_NAMES}
