"""Exception types raised across the package.

Everything data-shaped derives from :class:`ValueError` so callers that only
know sklearn conventions can catch the usual base classes.
"""


class Pose2TextError(ValueError):
    """Base class for all package-specific errors."""


class InvalidDimensionsError(Pose2TextError):
    """Frame width/height is non-positive."""


class CorruptFrameError(Pose2TextError):
    """A keypoint coordinate is NaN/Inf; message names the keypoint index."""


class SubRateClipError(Pose2TextError):
    """Clip frame rate is below the requested target rate (clip is discarded)."""


class DatasetParseError(Pose2TextError):
    """A dataset record could not be parsed; message carries the line number."""


class SchemaError(Pose2TextError):
    """A parsed record violates the clip schema (e.g. a frame without 85 keypoints)."""


class LexiconMissError(Pose2TextError):
    """A sentence uses a word with no template in the gesture lexicon."""


class GenerationError(Pose2TextError):
    """Synthetic lexicon generation could not satisfy the separability bound."""


class ConfigError(Pose2TextError):
    """A configuration value violates its documented invariant."""


class ShapeError(Pose2TextError):
    """An array argument has the wrong shape for the requested operation."""


class EmptyInputError(Pose2TextError):
    """An operation that needs at least one element received none."""


class InvalidTokenIdError(Pose2TextError):
    """A token id is outside the vocabulary range."""


class NonFiniteUpdateError(Pose2TextError):
    """A gradient or optimizer update became NaN/Inf; the step must be skipped."""
