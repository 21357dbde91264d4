"""Exception and warning types shared across the package."""


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class InvalidQuaternionError(EngineError):
    """A quaternion input is not unit-norm within tolerance."""


class TrajectoryTooShortError(EngineError):
    """An operation requires more waypoints than the trajectory has."""


class GripperSequenceError(EngineError):
    """Requested length cannot preserve the gripper-state run sequence."""


class EmptyPoolError(EngineError):
    """A trajectory pool that must be non-empty is empty."""


class EmptyVocabularyError(EngineError):
    """No usable tokens remain to build a vocabulary."""


class InvalidThresholdsError(EngineError):
    """Labeling thresholds are degenerate."""


class ShapeMismatchError(EngineError):
    """Array dimensions do not match the configured model."""


class DivergenceError(EngineError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, *, epoch: int | None = None, block: str | None = None):
        super().__init__(message)
        self.epoch = epoch
        self.block = block


class TooFewManualsError(EngineError):
    """Fewer manuals than requested folds."""


class DatasetFormatError(EngineError):
    """A dataset file violates the on-disk schema.

    ``location`` names the offending file and, where possible, the JSON
    path within it.
    """

    def __init__(self, message: str, *, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class EmptyDatasetError(DatasetFormatError):
    """The dataset directory contains no objects."""


class ReferentialIntegrityError(DatasetFormatError):
    """A dataset file references an id that does not resolve."""


class CheckpointError(EngineError):
    """A model checkpoint is unreadable or inconsistent."""


class AmbiguousFrameWarning(UserWarning):
    """Part projection is rotationally symmetric; axis chosen by fallback."""


class DegenerateLabelsWarning(UserWarning):
    """Training data contains a single class."""
