"""Exception hierarchy shared by every mapqa module.

Three base classes map onto the CLI exit codes:

* ValidationError  -> exit code 2 (caller passed inconsistent arguments or data shapes)
* DataError        -> exit code 3 (files on disk are missing, malformed, or unreadable)
* ConvergenceFailure -> exit code 4 (an iterative solver exhausted its budget)
"""


class MapqaError(Exception):
    """Common ancestor so callers can catch everything from this package."""

    exit_code = 1


class ValidationError(MapqaError):
    exit_code = 2


class DataError(MapqaError):
    exit_code = 3


class ConvergenceFailure(MapqaError):
    exit_code = 4


# --- validation family -------------------------------------------------

class ShapeMismatch(ValidationError):
    """Array shapes or channel counts do not line up."""


class DegenerateOutput(ValidationError):
    """An operator would produce an output with a spatial dimension < 1."""


class ResolutionMismatch(ValidationError):
    """Reference and distorted images differ in resolution."""


class MapTooSmall(ValidationError):
    """A similarity metric received a map below its minimum support."""


class DegenerateInput(ValidationError):
    """Input admits no meaningful answer (zero variance, all ties, ...)."""


class DimensionMismatch(ValidationError):
    """Query vector length does not match the trained feature dimension."""


class DomainError(ValidationError):
    """Scalar argument outside its mathematical domain."""


class TooFewReferences(ValidationError):
    """Fewer distinct reference ids than the split protocol requires."""


# --- data family -------------------------------------------------------

class MissingFile(DataError):
    """A file named by a descriptor or manifest does not exist."""


class MalformedDescriptor(DataError):
    """network.json is unparseable or violates its schema."""


class ChannelChainBroken(DataError):
    """Consecutive layers declare incompatible channel counts."""


class MissingColumn(DataError):
    """Manifest or feature CSV lacks a required header column."""


class MissingImageFile(DataError):
    """Manifest row points at an image that is not on disk."""


class DuplicatePairId(DataError):
    """Two manifest rows share a pair_id."""


class UnsupportedFormat(DataError):
    """Image file is not 8-bit RGB/grayscale PNG or BMP."""


class CorruptFile(DataError):
    """File exists but cannot be decoded."""


class IoError(DataError):
    """Filesystem write failed while emitting outputs."""


# --- convergence family ------------------------------------------------

class CholeskyFailure(ConvergenceFailure):
    """Kernel matrix plus noise term was not positive definite."""
