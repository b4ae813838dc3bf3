"""ECG rhythm classification from HRV, P/PR/QRS morphology and SWT sub-band features.

Nine classes (NSR, SA, SB, STACH, AF, AFL, PAC, 1AVB, PVC) are separated by a
random forest trained on one of two feature sets: ``time48`` (HRV plus
delineation-based morphology) or ``wavelet66`` (HRV plus statistics of the
stationary wavelet detail levels D3..D7).
"""

__version__ = "0.1.0"

from .domain import (  # noqa: E402
    FEATURE_NAMES,
    LABELS,
    Beat,
    Dataset,
    EcgRecord,
    FeatureMode,
    FeatureVector,
    FiducialMap,
    RhythmLabel,
)
from .kernels import BACKEND  # noqa: E402

__all__ = [
    "BACKEND",
    "Beat",
    "Dataset",
    "EcgRecord",
    "FEATURE_NAMES",
    "FeatureMode",
    "FeatureVector",
    "FiducialMap",
    "LABELS",
    "RhythmLabel",
    "__version__",
]
