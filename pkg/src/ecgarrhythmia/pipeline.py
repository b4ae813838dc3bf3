"""Record-to-feature extraction for both feature sets and the end-to-end run.

time48
    band-pass + notch, R-peaks, delineation, then 11 HRV + 18 P-wave +
    5 PR-interval + 14 QRS values.
wavelet66
    notch only (baseline wander and muscle noise fall into the discarded
    D1, D2 and approximation bands), R-peaks for 16 HRV values, then SWT
    statistics of D3..D7.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .balance import BalanceConfig, auto_target
from .classify import ForestParams, save_model, train
from .delineate import DEFAULT_CONFIG, DelineationConfig, delineate, detect_r_peaks
from .domain import (
    FEATURE_NAMES,
    Dataset,
    EcgRecord,
    FeatureMode,
    FeatureVector,
    load_records,
    parse_mode,
    save_features,
)
from .errors import DataError, EcgError
from .evaluate import balanced_for_training, kfold_crossval, present_labels
from .features_time import (
    DEFAULT_PARAMS,
    EntropyParams,
    extract_hrv,
    extract_pri,
    extract_pwave,
    extract_qrs,
    heart_rate_series,
)
from .preprocess import clean, pad_to_multiple
from .wavelet import DEFAULT_LEVELS, extract_wavelet_features, get_wavelet, swt


@dataclass(frozen=True)
class FilterSettings:
    low_hz: float = 1.0
    high_hz: float = 150.0
    notch_hz: float | None = 50.0


def record_features(record: EcgRecord, mode="time48", wavelet: str = "sym7",
                    params: EntropyParams = DEFAULT_PARAMS,
                    filters: FilterSettings = FilterSettings(),
                    delineation: DelineationConfig = DEFAULT_CONFIG) -> FeatureVector:
    """Feature vector of one record; estimator fallbacks are listed in ``flags``."""
    mode = parse_mode(mode)
    flags: set = set()
    if mode is FeatureMode.TIME48:
        x = clean(record, filters.low_hz, filters.high_hz, filters.notch_hz)
        fid = delineate(x, detect_r_peaks(x, delineation), delineation)
        hr = heart_rate_series(fid.r_peaks, x.fs_hz)
        values = {
            **extract_hrv(hr, "basic11", params, flags),
            **extract_pwave(x, fid, params, flags),
            **extract_pri(fid, x.fs_hz, flags),
            **extract_qrs(x, fid, params, flags),
        }
    else:
        spec = get_wavelet(wavelet)
        x = clean(record, None, filters.high_hz, filters.notch_hz)
        hr = heart_rate_series(detect_r_peaks(x, delineation), x.fs_hz)
        decomp = swt(pad_to_multiple(x.samples, 1 << DEFAULT_LEVELS), spec, fs_hz=x.fs_hz)
        values = {
            **extract_hrv(hr, "extended16", params, flags),
            **extract_wavelet_features(decomp, params, flags),
        }
    names = FEATURE_NAMES[mode]
    return FeatureVector(mode, np.array([values[n] for n in names]), frozenset(flags))


@dataclass
class ExtractionResult:
    dataset: Dataset
    flags: dict = field(default_factory=dict)  # record id -> sorted flag list
    failures: list = field(default_factory=list)  # (record id, error class, message)

    def flag_counts(self) -> dict:
        counts: dict = {}
        for fl in self.flags.values():
            for f in fl:
                counts[f] = counts.get(f, 0) + 1
        return dict(sorted(counts.items()))


def _with_context(exc: EcgError, record_id: str) -> EcgError:
    new = type(exc)(f"record {record_id}: {exc}")
    new.__cause__ = exc
    return new


def extract_dataset(records, mode="time48", wavelet: str = "sym7",
                    params: EntropyParams = DEFAULT_PARAMS,
                    filters: FilterSettings = FilterSettings(),
                    skip_errors: bool = False) -> ExtractionResult:
    """Features for labelled records.

    ``records`` holds :class:`EcgRecord` objects or ``(record, anything)``
    pairs as returned by the synthetic generator. With ``skip_errors`` a
    failing record is left out and listed in ``failures``; otherwise its
    error is raised with the record id prepended.
    """
    mode = parse_mode(mode)
    vectors, labels, ids, flags, failures = [], [], [], {}, []
    for item in records:
        rec = item[0] if isinstance(item, tuple) else item
        if rec.label is None:
            raise DataError(f"record {rec.id}: no label")
        try:
            fv = record_features(rec, mode, wavelet, params, filters)
        except EcgError as exc:
            if not skip_errors:
                raise _with_context(exc, rec.id) from exc
            failures.append((rec.id, type(exc).__name__, str(exc)))
            continue
        vectors.append(fv)
        labels.append(rec.label)
        ids.append(rec.id)
        if fv.flags:
            flags[rec.id] = sorted(fv.flags)
    if not vectors:
        return ExtractionResult(Dataset(np.zeros((0, len(FEATURE_NAMES[mode]))), [], mode),
                                flags, failures)
    return ExtractionResult(Dataset.from_vectors(vectors, labels, ids), flags, failures)


@dataclass(frozen=True)
class PipelineConfig:
    mode: FeatureMode = FeatureMode.TIME48
    wavelet: str | None = None  # wavelet66 only; defaults to sym7
    filters: FilterSettings = FilterSettings()
    balance: BalanceConfig | None = None  # None: balance to the median class count
    balance_train_only: bool = False
    no_balance: bool = False
    forest: ForestParams = ForestParams()
    classifier: str = "forest"
    folds: int = 10
    seed: int = 42
    manifest: str | None = None
    out_dir: str = "."

    def __post_init__(self):
        object.__setattr__(self, "mode", parse_mode(self.mode))
        if self.mode is FeatureMode.TIME48 and self.wavelet is not None:
            raise ValueError("a wavelet only applies to the wavelet66 feature set")
        if self.mode is FeatureMode.WAVELET66:
            object.__setattr__(self, "wavelet", get_wavelet(self.wavelet or "sym7").name)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = str(self.mode)
        d.pop("manifest")
        d.pop("out_dir")
        d["forest"].pop("n_jobs", None)
        return d


def run_pipeline(config: PipelineConfig, records=None):
    """Features, balancing, cross-validation and a final model on all rows.

    Writes ``features.csv``, ``model.bin`` and ``report.json`` into
    ``config.out_dir`` and returns ``(report, {artifact: path})``.
    """
    if records is None:
        if config.manifest is None:
            raise DataError("no manifest given")
        records = load_records(config.manifest)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    extracted = extract_dataset(records, config.mode, config.wavelet or "sym7",
                                filters=config.filters)
    ds = extracted.dataset
    features_path = out / "features.csv"
    save_features(ds, features_path)

    balance_train = None
    if config.no_balance:
        train_ds = ds
    elif config.balance_train_only:
        train_ds = ds
        balance_train = config.balance or BalanceConfig(auto_target(ds, present_labels(ds)), 5, config.seed)
    else:
        train_ds = balanced_for_training(ds, config.balance, config.seed)

    report = kfold_crossval(train_ds, config.folds, config.forest, config.seed,
                            config.classifier, balance_train=balance_train)
    final_ds = train_ds if balance_train is None else balanced_for_training(ds, balance_train)
    meta = {"wavelet": config.wavelet} if config.wavelet else {}
    model = train(final_ds, config.classifier, replace(config.forest, seed=config.seed), meta=meta)
    model_path = out / "model.bin"
    save_model(model, model_path)

    doc = {
        "config": config.to_dict(),
        "n_records": len(ds),
        "n_training_rows": len(train_ds),
        "extraction_flags": extracted.flag_counts(),
        "failures": extracted.failures,
        "crossval": report.to_dict(),
    }
    report_path = out / "report.json"
    report_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return report, {"features": features_path, "model": model_path, "report": report_path}

