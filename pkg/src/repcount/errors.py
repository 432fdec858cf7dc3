"""Exception types shared across the package."""


class RepCountError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateSegment(RepCountError):
    """A limb segment collapsed to (near) zero length, so no angle exists.

    Typically signals a missing or collapsed landmark; callers either
    substitute the previous frame's angle or mark the frame invalid.
    """

    def __init__(self, message, joint=None):
        super().__init__(message)
        self.joint = joint


class SideMismatch(RepCountError):
    """Angle sets passed with the wrong LEFT/RIGHT side tags."""


class ModeMismatch(RepCountError):
    """Feature vector mode does not match the model's mode."""


class UnknownAction(RepCountError):
    """Action name not present in the model's action list."""


class EmptyDataset(RepCountError):
    """Training data is empty or misses a required label class."""


class MixedModes(RepCountError):
    """Training examples do not all share one feature mode."""


class NonFiniteLoss(RepCountError):
    """Training loss became NaN/inf (learning-rate blowup)."""


class BadRule(RepCountError):
    """Geometric scoring rule has equal calibration angles."""


class BadWindow(RepCountError):
    """Smoothing window is not an odd integer in [1, len(scores)]."""


class BadSpec(RepCountError):
    """Synthetic-motion spec violates its invariants."""


class MissingPrediction(RepCountError):
    """No prediction supplied for an annotated video."""

    def __init__(self, video_id):
        super().__init__(f"no prediction for video {video_id!r}")
        self.video_id = video_id


class DuplicatePrediction(RepCountError):
    """More than one prediction supplied for the same video."""

    def __init__(self, video_id):
        super().__init__(f"duplicate prediction for video {video_id!r}")
        self.video_id = video_id


class ZeroGroundTruth(RepCountError):
    """Ground-truth count below 1; the normalized error would divide by it."""


class StaleCorrection(RepCountError):
    """Correction ledger entry does not match the current annotation value."""


class IoFailure(RepCountError):
    """Serialization target could not be written."""


class ParseError(RepCountError):
    """Input stream does not conform to the file grammar.

    `line` is 1-based; 0 means the problem is not tied to one line.
    """

    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class WrongLandmarkCount(ParseError):
    """A landmark record does not contain exactly 33 landmarks."""


class NonMonotonicFrameIndex(ParseError):
    """Frame indices are not strictly increasing within a sequence."""


class DuplicateVideoId(ParseError):
    """The same video id appears on more than one annotation row."""

    def __init__(self, line, video_id):
        super().__init__(line, f"duplicate video_id {video_id!r}")
        self.video_id = video_id
