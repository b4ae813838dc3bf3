"""Core data types, the rhythm taxonomy and the on-disk text formats.

Record file
-----------
A header of ``# key: value`` lines followed by one sample per line::

    # id: rec0001
    # fs_hz: 500
    # lead: II
    # label: NSR
    0.0131
    0.0127
    ...

``label`` may be empty or omitted.

Manifest
--------
CSV with header ``path,label``; relative paths resolve against the manifest's
directory. A non-empty ``label`` column overrides the label in the record header.

Feature matrix
--------------
CSV with header ``id,<feature names...>,label`` and one row per record. Values
are written with 17 significant digits so that a save/load cycle is exact.
"""

from __future__ import annotations

import csv
import enum
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    MalformedHeader,
    MissingFile,
    NonPositiveSamplingRate,
    UnknownLabel,
)


class RhythmLabel(enum.Enum):
    """The nine rhythm classes, in canonical (tie-breaking) order."""

    NSR = "NSR"
    SA = "SA"
    SB = "SB"
    STACH = "STACH"
    AF = "AF"
    AFL = "AFL"
    PAC = "PAC"
    AVB1 = "1AVB"
    PVC = "PVC"

    def __str__(self) -> str:
        return self.value

    @property
    def index(self) -> int:
        return LABELS.index(self)


LABELS: tuple[RhythmLabel, ...] = tuple(RhythmLabel)

_ALIASES = {
    "SVPB": RhythmLabel.PAC,
    "VPB": RhythmLabel.PVC,
    "AVB1": RhythmLabel.AVB1,
    "IAVB": RhythmLabel.AVB1,
}


def parse_label(text: str) -> RhythmLabel:
    """Parse a rhythm abbreviation, case-insensitively.

    ``SVPB`` is folded into PAC and ``VPB`` into PVC.
    """
    key = str(text).strip().upper()
    for label in RhythmLabel:
        if label.value == key:
            return label
    if key in _ALIASES:
        return _ALIASES[key]
    raise UnknownLabel(f"unknown rhythm label {text!r}")


# ---------------------------------------------------------------------------
# feature names (frozen public contract)

HRV_BASIC_NAMES: tuple[str, ...] = (
    "HR_max", "HR_min", "HR_mean", "HR_std", "HR_MaxDev", "HR_MAD",
    "HR_kurt", "HR_skew", "HR_ApEn", "HR_ShEn", "HR_PeEn",
)
HRV_EXTENDED_NAMES: tuple[str, ...] = HRV_BASIC_NAMES + (
    "HR_stdAbsDiff", "HR_CoV", "HR_HFD", "HR_HM", "HR_HC",
)
_P_BASES = ("peak", "width", "MaxDev", "energy", "Corr", "SpEn", "kurt", "skew", "atrialHR")
PWAVE_NAMES: tuple[str, ...] = tuple(
    f"P_{b}_{s}" for b in _P_BASES for s in ("mean", "std")
)
PRI_NAMES: tuple[str, ...] = ("PRI_mean", "PRI_std", "PRI_max", "PRI_min", "PRI_MaxDev")
_QRS_BASES = ("width", "Corr", "energy", "SpEn", "SaEn", "kurt", "skew")
QRS_NAMES: tuple[str, ...] = tuple(
    f"QRS_{b}_{s}" for b in _QRS_BASES for s in ("mean", "std")
)
WAVELET_LEVELS: tuple[int, ...] = (3, 4, 5, 6, 7)
_WAVELET_BASES = ("mean", "std", "skew", "kurt", "ApEn", "ShEn", "PeEn", "LEEn", "RWE", "MWE")
WAVELET_NAMES: tuple[str, ...] = tuple(
    f"D{lvl}_{b}" for lvl in WAVELET_LEVELS for b in _WAVELET_BASES
)


class FeatureMode(str, enum.Enum):
    TIME48 = "time48"
    WAVELET66 = "wavelet66"

    def __str__(self) -> str:
        return self.value


FEATURE_NAMES: dict[FeatureMode, tuple[str, ...]] = {
    FeatureMode.TIME48: HRV_BASIC_NAMES + PWAVE_NAMES + PRI_NAMES + QRS_NAMES,
    FeatureMode.WAVELET66: HRV_EXTENDED_NAMES + WAVELET_NAMES,
}


def parse_mode(text) -> FeatureMode:
    try:
        return FeatureMode(str(text).strip().lower())
    except ValueError:
        raise ValueError(f"unknown feature mode {text!r}; expected time48 or wavelet66") from None


# ---------------------------------------------------------------------------
# records and fiducials


@dataclass(frozen=True)
class EcgRecord:
    id: str
    fs_hz: float
    samples: np.ndarray
    label: RhythmLabel | None = None
    lead: str = "II"

    def __post_init__(self):
        if not self.fs_hz > 0:
            raise NonPositiveSamplingRate(f"{self.id}: fs_hz must be positive, got {self.fs_hz}")
        arr = np.asarray(self.samples, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.fs_hz

    def with_samples(self, samples) -> "EcgRecord":
        return EcgRecord(self.id, self.fs_hz, samples, self.label, self.lead)


BEAT_KEYS = ("p_onset", "p_peak", "p_offset", "qrs_onset", "r", "qrs_offset", "t_peak", "t_offset")


@dataclass(frozen=True)
class Beat:
    """Fiducial indices of one beat. Missing components are ``None``."""

    r: int
    p_onset: int | None = None
    p_peak: int | None = None
    p_offset: int | None = None
    qrs_onset: int | None = None
    qrs_offset: int | None = None
    t_peak: int | None = None
    t_offset: int | None = None

    @property
    def has_p(self) -> bool:
        return None not in (self.p_onset, self.p_peak, self.p_offset)

    @property
    def has_qrs(self) -> bool:
        return self.qrs_onset is not None and self.qrs_offset is not None

    @property
    def has_t(self) -> bool:
        return self.t_peak is not None and self.t_offset is not None

    def ordered_indices(self) -> list[int]:
        return [getattr(self, k) for k in BEAT_KEYS if getattr(self, k) is not None]

    def is_ordered(self) -> bool:
        idx = self.ordered_indices()
        return all(a <= b for a, b in zip(idx, idx[1:]))

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in BEAT_KEYS}

    @classmethod
    def from_dict(cls, d: dict) -> "Beat":
        return cls(**{k: (None if d.get(k) is None else int(d[k])) for k in BEAT_KEYS})


@dataclass(frozen=True)
class FiducialMap:
    beats: tuple[Beat, ...]
    length: int

    @property
    def r_peaks(self) -> np.ndarray:
        return np.array([b.r for b in self.beats], dtype=int)

    def __len__(self) -> int:
        return len(self.beats)

    def validate(self) -> None:
        """Raise ``ValueError`` when an ordering invariant is broken."""
        r = self.r_peaks
        if r.size and (np.any(np.diff(r) <= 0) or r[0] < 0 or r[-1] >= self.length):
            raise ValueError("r_peaks must be strictly increasing and inside the record")
        for i, b in enumerate(self.beats):
            if not b.is_ordered():
                raise ValueError(f"beat {i} has out-of-order fiducials: {b}")
            idx = b.ordered_indices()
            if idx and (idx[0] < 0 or idx[-1] >= self.length):
                raise ValueError(f"beat {i} has indices outside the record")

    def to_dict(self) -> dict:
        return {
            "length": self.length,
            "r_peaks": [int(v) for v in self.r_peaks],
            "beats": [b.to_dict() for b in self.beats],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FiducialMap":
        return cls(tuple(Beat.from_dict(b) for b in d["beats"]), int(d["length"]))


# ---------------------------------------------------------------------------
# feature vectors and datasets


@dataclass(frozen=True)
class FeatureVector:
    mode: FeatureMode
    values: np.ndarray
    flags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        expected = len(FEATURE_NAMES[self.mode])
        if values.shape != (expected,):
            raise DimensionMismatch(f"{self.mode} expects {expected} values, got {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def names(self) -> tuple[str, ...]:
        return FEATURE_NAMES[self.mode]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))


@dataclass
class Dataset:
    """Feature matrix plus labels; rows share one feature mode.

    ``names`` defaults to the full canonical list of ``mode`` but may be a
    subset (feature-subset ablations).
    """

    X: np.ndarray
    labels: list
    mode: FeatureMode
    ids: list[str] = None
    names: tuple[str, ...] = None

    def __post_init__(self):
        self.mode = parse_mode(self.mode)
        if self.names is None:
            self.names = FEATURE_NAMES[self.mode]
        self.names = tuple(self.names)
        self.X = np.asarray(self.X, dtype=float)
        if self.X.size == 0:
            self.X = self.X.reshape(len(self.labels), len(self.names))
        if self.ids is None:
            self.ids = [f"row{i}" for i in range(len(self.labels))]
        self.ids = list(self.ids)
        self.labels = list(self.labels)
        if self.X.shape[1] != len(self.names):
            raise DimensionMismatch(f"{self.X.shape[1]} columns for {len(self.names)} names")
        if not (len(self.ids) == len(self.labels) == self.X.shape[0]):
            raise DimensionMismatch("ids, labels and rows differ in length")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def y(self) -> np.ndarray:
        """Labels as class indices into :data:`LABELS`."""
        return np.array([lab.index for lab in self.labels], dtype=np.intp)

    def rows(self) -> Iterator[tuple[FeatureVector, RhythmLabel]]:
        if self.names != FEATURE_NAMES[self.mode]:
            raise DimensionMismatch("rows() requires the full canonical feature set")
        for x, lab in zip(self.X, self.labels):
            yield FeatureVector(self.mode, x), lab

    def class_counts(self) -> dict[RhythmLabel, int]:
        counts = {lab: 0 for lab in LABELS}
        for lab in self.labels:
            counts[lab] += 1
        return counts

    def subset(self, index) -> "Dataset":
        index = np.asarray(index, dtype=np.intp)
        return Dataset(
            self.X[index], [self.labels[i] for i in index], self.mode,
            [self.ids[i] for i in index], self.names,
        )

    def select_columns(self, names: Sequence[str]) -> "Dataset":
        cols = [self.names.index(n) for n in names]
        return Dataset(self.X[:, cols], self.labels, self.mode, self.ids, tuple(names))

    @classmethod
    def from_vectors(cls, vectors: Iterable[FeatureVector], labels, ids=None) -> "Dataset":
        vectors = list(vectors)
        if not vectors:
            raise DimensionMismatch("cannot infer mode from an empty vector list")
        mode = vectors[0].mode
        if any(v.mode != mode for v in vectors):
            raise DimensionMismatch("all feature vectors must share one mode")
        return cls(np.vstack([v.values for v in vectors]), list(labels), mode, ids)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.mode == other.mode and self.names == other.names and self.ids == other.ids
            and self.labels == other.labels and self.X.shape == other.X.shape
            and np.array_equal(self.X, other.X)
        )


# ---------------------------------------------------------------------------
# file formats


def read_record(path) -> EcgRecord:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"record file not found: {path}")
    header: dict[str, str] = {}
    values: list[float] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, val = line[1:].partition(":")
                if not sep:
                    raise MalformedHeader(f"{path}:{lineno}: expected '# key: value'")
                header[key.strip().lower()] = val.strip()
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise MalformedHeader(f"{path}:{lineno}: not a number: {line!r}") from None
    if "fs_hz" not in header:
        raise MalformedHeader(f"{path}: missing fs_hz header")
    try:
        fs = float(header["fs_hz"])
    except ValueError:
        raise MalformedHeader(f"{path}: bad fs_hz {header['fs_hz']!r}") from None
    if not values:
        raise MalformedHeader(f"{path}: record contains no samples")
    label = parse_label(header["label"]) if header.get("label") else None
    rec_id = header.get("id") or path.stem
    return EcgRecord(rec_id, fs, np.array(values), label, header.get("lead", "II"))


def write_record(record: EcgRecord, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"# id: {record.id}\n# fs_hz: {record.fs_hz:g}\n# lead: {record.lead}\n")
        fh.write(f"# label: {record.label.value if record.label else ''}\n")
        fh.write("\n".join("%.17g" % v for v in record.samples))
        fh.write("\n")


def read_manifest(manifest_path) -> list[tuple[Path, RhythmLabel | None]]:
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise MissingFile(f"manifest not found: {manifest_path}")
    base = manifest_path.parent
    entries = []
    with open(manifest_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "path" not in reader.fieldnames:
            raise MalformedHeader(f"{manifest_path}: expected a 'path,label' header")
        for row in reader:
            p = Path(row["path"].strip())
            if not p.is_absolute():
                p = base / p
            lab = (row.get("label") or "").strip()
            entries.append((p, parse_label(lab) if lab else None))
    return entries


def write_manifest(entries: Iterable[tuple], manifest_path) -> None:
    manifest_path = Path(manifest_path)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    base = manifest_path.parent.resolve()
    with open(manifest_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "label"])
        for path, label in entries:
            path = Path(path).resolve()
            try:
                rel = os.path.relpath(path, base)
            except ValueError:
                rel = str(path)
            w.writerow([rel, label.value if label else ""])


def load_records(manifest_path) -> list[EcgRecord]:
    """Load every record listed in a manifest, preserving manifest order."""
    records = []
    for path, label in read_manifest(manifest_path):
        rec = read_record(path)
        if label is not None and rec.label != label:
            rec = EcgRecord(rec.id, rec.fs_hz, rec.samples, label, rec.lead)
        records.append(rec)
    return records


def save_features(dataset: Dataset, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", *dataset.names, "label"])
        for rid, x, lab in zip(dataset.ids, dataset.X, dataset.labels):
            w.writerow([rid, *("%.17g" % v for v in x), lab.value if lab is not None else ""])


def load_features(path, mode: FeatureMode | str | None = None) -> Dataset:
    """Read a feature matrix written by :func:`save_features`.

    The mode is inferred from the header unless given; a header whose names are
    neither a full canonical list nor a subset of ``mode``'s names raises
    :class:`DimensionMismatch`.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"feature file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DimensionMismatch(f"{path}: empty feature file") from None
        if len(header) < 3 or header[0] != "id" or header[-1] != "label":
            raise DimensionMismatch(f"{path}: header must be id,<features>,label")
        names = tuple(header[1:-1])
        if mode is None:
            mode = _infer_mode(names)
            if mode is None:
                raise DimensionMismatch(f"{path}: {len(names)} columns match no feature mode")
        else:
            mode = parse_mode(mode)
            if names != FEATURE_NAMES[mode]:
                raise DimensionMismatch(
                    f"{path}: {len(names)} columns, {mode} expects {len(FEATURE_NAMES[mode])}")
        ids, rows, labels = [], [], []
        for lineno, row in enumerate(reader, 2):
            if len(row) != len(header):
                raise DimensionMismatch(f"{path}:{lineno}: {len(row)} fields, expected {len(header)}")
            ids.append(row[0])
            try:
                rows.append([float(v) for v in row[1:-1]])
            except ValueError:
                raise DimensionMismatch(f"{path}:{lineno}: non-numeric feature value") from None
            labels.append(parse_label(row[-1]) if row[-1] else None)
    X = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return Dataset(X, labels, mode, ids, names)


def _infer_mode(names: tuple[str, ...]) -> FeatureMode | None:
    for mode, full in FEATURE_NAMES.items():
        if names == full:
            return mode
    for mode, full in FEATURE_NAMES.items():
        if set(names) <= set(full):
            return mode
    return None
