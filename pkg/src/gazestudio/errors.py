"""Exception types shared across the toolkit."""


class GazeStudioError(Exception):
    """Base class for all domain errors raised by this package."""


class MalformedLine(GazeStudioError):
    """A gaze-log line could not be parsed; carries the 1-based line number."""

    def __init__(self, line_no: int, reason: str = "unparseable line"):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


class EmptyTrack(GazeStudioError):
    """A gaze log contained no valid samples."""


class NonMonotonicTime(GazeStudioError):
    """Timestamps are not strictly increasing."""


class InsufficientData(GazeStudioError):
    """Too few observations for the requested computation."""


class DegenerateSteps(GazeStudioError):
    """All step lengths fall into a single histogram bin; no spread to fit."""


class TrackTooShort(GazeStudioError):
    """Track has fewer samples than one sliding window requires."""


class NoValidWindows(GazeStudioError):
    """Threshold calibration found no usable window on any healthy track."""


class MismatchedSeries(GazeStudioError):
    """An attention-level series does not correspond to the given track."""


class InvalidBox(GazeStudioError):
    """A bounding box is degenerate or lies outside the image."""


class EmptyUnion(GazeStudioError):
    """IoU is undefined: both the detected region and the boxes are empty."""


class BadGeometry(GazeStudioError):
    """Image dimensions are incompatible with the feature-grid geometry."""


class ShapeMismatch(GazeStudioError):
    """Array shapes disagree."""


class BadClass(GazeStudioError):
    """Class index outside the classifier's range."""


class EmptyDataset(GazeStudioError):
    """A training or evaluation set is empty."""


class MissingFile(GazeStudioError):
    """A manifest entry references a file that does not exist."""


class BadGrade(GazeStudioError):
    """A grade value is not an integer in 0..4."""


class StorageError(GazeStudioError):
    """Corpus files could not be written."""
