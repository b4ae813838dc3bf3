"""Exception hierarchy.

Every error belongs to one family; each family maps to a distinct CLI exit code.

======================  =========
family                  exit code
======================  =========
DataError               3
SignalError             4
FeatureError            5
ModelError              6
EvaluationError         7
======================  =========
"""


class EcgError(Exception):
    exit_code = 1


class DataError(EcgError):
    """Malformed or missing input files and dataset contents."""

    exit_code = 3


class SignalError(EcgError):
    """Signal-level preconditions (sampling rate, length, beats)."""

    exit_code = 4


class FeatureError(EcgError):
    """Feature estimator preconditions."""

    exit_code = 5


class ModelError(EcgError):
    """Classifier training, prediction and persistence."""

    exit_code = 6


class EvaluationError(EcgError):
    """Cross-validation, ablation and grid-search configuration."""

    exit_code = 7


# domain
class UnknownLabel(DataError, ValueError):
    pass


class MissingFile(DataError, FileNotFoundError):
    pass


class MalformedHeader(DataError, ValueError):
    pass


class NonPositiveSamplingRate(DataError, ValueError):
    pass


class DimensionMismatch(DataError, ValueError):
    pass


class MissingClass(DataError, ValueError):
    pass


# signal
class EmptySignal(SignalError, ValueError):
    pass


class SamplingRateTooLow(SignalError, ValueError):
    pass


class SignalTooShort(SignalError, ValueError):
    pass


class NoBeatsDetected(SignalError):
    pass


class TooFewBeats(SignalError):
    pass


class LengthNotAligned(SignalError, ValueError):
    pass


class InvalidScript(SignalError, ValueError):
    pass


# features
class SeriesTooShort(FeatureError, ValueError):
    pass


class ZeroVariance(FeatureError, ValueError):
    pass


class EmptySeries(FeatureError, ValueError):
    pass


class UnknownWavelet(FeatureError, ValueError):
    pass


class LevelOutOfRange(FeatureError, ValueError):
    pass


class ZeroTotalEnergy(FeatureError, ValueError):
    pass


# balance / model
class ClassTooSmall(ModelError, ValueError):
    pass


class TargetExceedsCount(ModelError, ValueError):
    pass


class DegenerateDataset(ModelError, ValueError):
    pass


class VersionMismatch(ModelError):
    pass


class CorruptModel(ModelError):
    pass


# evaluation
class ClassTooSmallForK(EvaluationError, ValueError):
    pass


class UnknownSubset(EvaluationError, ValueError):
    pass


class EmptyGrid(EvaluationError, ValueError):
    pass
