"""Exception hierarchy shared across the package."""


class FitseqError(Exception):
    """Base class for all package errors."""


# --- CSV / landmark input -------------------------------------------------

class MalformedHeader(FitseqError):
    """CSV header does not match the expected schema."""


class NonNumericCell(FitseqError):
    def __init__(self, row: int, column: str, value: str):
        super().__init__(f"non-numeric value {value!r} at row {row}, column {column!r}")
        self.row = row
        self.column = column
        self.value = value


class SinkFailure(FitseqError):
    """Writing to the output stream failed."""


class UnknownLabel(FitseqError):
    """Label not present in the label table."""


# --- featurization --------------------------------------------------------

class LayoutMismatch(FitseqError):
    """Frame lacks the data the requested feature layout needs."""


class DegenerateScale(FitseqError):
    """Distance normalizer is too close to zero to divide by."""


class EmptyTrainingSet(FitseqError):
    """An operation that fits on training data received none."""


# --- network / model ------------------------------------------------------

class ShapeMismatch(FitseqError):
    """Array shapes inconsistent with the layer or network spec."""


class CorruptModelFile(FitseqError):
    """Model container unreadable or structurally invalid."""


class UnsupportedVersion(FitseqError):
    """Model container written by an incompatible format version."""


# --- training / evaluation ------------------------------------------------

class TooFewSamples(FitseqError):
    """Not enough units of some class to split at the chosen granularity."""


class DivergedLoss(FitseqError):
    """Training loss became NaN/Inf; carries the partial record."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class FeatureConfigMismatch(FitseqError):
    """Samples were featurized with a different layout than the model expects."""


class WindowTooShort(FitseqError):
    """Fewer frames than the voter's window length."""


# --- repetition counting / streaming ---------------------------------------

class UnknownExercise(FitseqError):
    """No built-in repetition spec for this exercise label."""


class NoModelLoaded(FitseqError):
    """Streaming session used before a model was attached."""
