"""Exception types raised across the package.

Every contract violation maps to a dedicated class so callers (and the CLI)
can convert failures to machine-readable reports without string matching.
"""


class SphxError(Exception):
    """Base class for all package errors."""


# --- embedding ---------------------------------------------------------


class InvalidDimensions(SphxError):
    """d or m is zero/negative, or m < d for a structured transform."""


class NotPowerOfTwo(SphxError):
    """Structured transforms require m to be a power of two."""


class DimensionMismatch(SphxError):
    """Input vector dimension does not match the transform."""


class EmptyInput(SphxError):
    """An operation received an empty vector."""


class CodeLengthMismatch(SphxError):
    """Two sparse codes (or a code and an index) disagree on m."""


# --- analysis ----------------------------------------------------------


class InvalidParams(SphxError):
    """Scalar parameters outside their documented domain."""


class DegenerateCorrelation(SphxError):
    """|lambda| = 1: derivative quantities are undefined there."""


class OutOfPhaseRegion(SphxError):
    """lambda is on the wrong side of the 2r-1 phase boundary."""


class NoSolution(SphxError):
    """The implicit error-band equation has no solution for these params."""

    def __init__(self, message, side=None):
        super().__init__(message)
        self.side = side  # "minus" or "plus"


class DegenerateSigma(SphxError):
    """sigma(lambda) = 0: the normalized score is undefined."""


# --- index -------------------------------------------------------------


class DuplicateDocId(SphxError):
    """The same external document id was supplied twice at build time."""


class InvalidCutoff(SphxError):
    """Search cutoff parameters outside their valid region."""


class CorruptStream(SphxError):
    """Index stream failed magic/truncation/checksum validation."""


class VersionMismatch(SphxError):
    """Index stream was written by an incompatible format version."""


# --- corpus ------------------------------------------------------------


class ParseError(SphxError):
    """Unparseable corpus input; message carries the offending row/line."""


class ZeroVector(SphxError):
    """A corpus record has zero norm and cannot live on the unit sphere."""


class RaggedDimensions(SphxError):
    """Corpus records disagree on dimensionality."""


class SeriesTooShort(SphxError):
    """Time series shorter than the requested window allows."""


class NonPositivePrice(SphxError):
    """Relative differences require strictly positive closing values."""


class BadEdges(SphxError):
    """Histogram edges must be strictly ascending with at least two entries."""


# --- simulate ----------------------------------------------------------


class InvalidLambda(SphxError):
    """Requested inner product outside [-1, 1]."""
