"""Band-pass and powerline-notch filtering, and zero-padding for the SWT."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .domain import EcgRecord
from .errors import EmptySignal, SamplingRateTooLow, SignalTooShort

BANDPASS_ORDER = 4
NOTCH_Q = 30.0


@dataclass(frozen=True)
class FilterSpec:
    """Parameters of one IIR stage.

    ``kind`` is ``"bandpass"`` (uses ``low_hz``/``high_hz``) or ``"notch"``
    (uses ``center_hz``/``q_factor``).
    """

    kind: str
    low_hz: float = 1.0
    high_hz: float = 150.0
    center_hz: float = 50.0
    q_factor: float = NOTCH_Q
    order: int = BANDPASS_ORDER

    def check(self, fs_hz: float) -> None:
        nyq = fs_hz / 2.0
        if self.kind == "bandpass":
            if not 0 < self.low_hz < self.high_hz:
                raise ValueError(f"need 0 < low_hz < high_hz, got {self.low_hz}, {self.high_hz}")
            if self.high_hz >= nyq:
                raise SamplingRateTooLow(
                    f"fs={fs_hz} Hz cannot support a {self.high_hz} Hz upper cut-off")
        elif self.kind == "notch":
            if not 0 < self.center_hz < nyq:
                raise SamplingRateTooLow(
                    f"fs={fs_hz} Hz cannot support a {self.center_hz} Hz notch")
        else:
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.order < 1:
            raise ValueError("filter order must be positive")

    def design(self, fs_hz: float) -> np.ndarray:
        """Second-order sections for this stage at ``fs_hz``."""
        self.check(fs_hz)
        if self.kind == "bandpass":
            return signal.butter(self.order, [self.low_hz, self.high_hz], btype="bandpass",
                                 fs=fs_hz, output="sos")
        b, a = signal.iirnotch(self.center_hz, self.q_factor, fs=fs_hz)
        return signal.tf2sos(b, a)

    @property
    def effective_order(self) -> int:
        # band-pass Butterworth of prototype order N is a 2N-order IIR
        return 2 * self.order if self.kind == "bandpass" else 2


def zero_phase(samples: np.ndarray, spec: FilterSpec, fs_hz: float) -> np.ndarray:
    """Forward-backward filtering with odd (point) reflection padding of 3x the filter order."""
    sos = spec.design(fs_hz)
    x = np.asarray(samples, dtype=float)
    padlen = 3 * spec.effective_order
    if x.size <= padlen:
        raise SignalTooShort(f"{x.size} samples; need more than {padlen} for this filter")
    return signal.sosfiltfilt(sos, x, padtype="odd", padlen=padlen)


def bandpass(record: EcgRecord, low_hz: float = 1.0, high_hz: float = 150.0,
             order: int = BANDPASS_ORDER) -> EcgRecord:
    """Zero-phase Butterworth band-pass; output has the input's length."""
    if record.fs_hz <= 2 * high_hz:
        raise SamplingRateTooLow(f"fs={record.fs_hz} Hz must exceed 2*{high_hz} Hz")
    spec = FilterSpec("bandpass", low_hz=low_hz, high_hz=high_hz, order=order)
    return record.with_samples(zero_phase(record.samples, spec, record.fs_hz))


def notch(record: EcgRecord, center_hz: float = 50.0, q_factor: float = NOTCH_Q) -> EcgRecord:
    """Zero-phase second-order IIR notch."""
    spec = FilterSpec("notch", center_hz=center_hz, q_factor=q_factor)
    return record.with_samples(zero_phase(record.samples, spec, record.fs_hz))


def clean(record: EcgRecord, low_hz: float | None = 1.0, high_hz: float = 150.0,
          notch_hz: float | None = 50.0) -> EcgRecord:
    """Band-pass (skipped when ``low_hz`` is None) followed by the notch (skipped when None).

    When ``high_hz`` is not below Nyquist the band-pass degrades to a high-pass
    at ``low_hz``.
    """
    out = record
    if low_hz is not None:
        if record.fs_hz > 2 * high_hz:
            out = bandpass(out, low_hz, high_hz)
        else:
            sos = signal.butter(BANDPASS_ORDER, low_hz, btype="highpass", fs=record.fs_hz,
                                output="sos")
            padlen = 3 * BANDPASS_ORDER
            if len(out) <= padlen:
                raise SignalTooShort(f"{len(out)} samples is too short to filter")
            out = out.with_samples(signal.sosfiltfilt(sos, out.samples, padtype="odd",
                                                      padlen=padlen))
    if notch_hz is not None and notch_hz < record.fs_hz / 2:
        out = notch(out, notch_hz)
    return out


def pad_to_multiple(samples, block: int) -> np.ndarray:
    """Append zeros up to the next multiple of ``block`` (a power of two)."""
    x = np.asarray(samples, dtype=float)
    if block < 1 or block & (block - 1):
        raise ValueError(f"block must be a power of two, got {block}")
    if x.size == 0:
        raise EmptySignal("cannot pad an empty signal")
    target = -(-x.size // block) * block
    if target == x.size:
        return x.copy()
    return np.concatenate([x, np.zeros(target - x.size)])
