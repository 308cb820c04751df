"""Engine error types.

Every error class carries a stable ``exit_code`` so shell harnesses can
branch on the failure class (see the table in README.md).
"""


class RefdiffError(Exception):
    """Base class for all engine errors."""

    exit_code = 1


# --- tensor container ---------------------------------------------------

class BadMagic(RefdiffError):
    exit_code = 10


class UnsupportedVersion(RefdiffError):
    """Unknown format version or dtype code."""

    exit_code = 11


class TruncatedPayload(RefdiffError):
    """Payload byte count disagrees with the declared dims/dtype."""

    exit_code = 12


class DimOverflow(RefdiffError):
    """ndim outside 1..4, a zero dim, or a dim exceeding u32."""

    exit_code = 13


class IoFailure(RefdiffError):
    exit_code = 14


# --- manifests ----------------------------------------------------------

class MissingField(RefdiffError):
    exit_code = 20


class DimMismatch(RefdiffError):
    exit_code = 21


class RootIndexOutOfRange(RefdiffError):
    exit_code = 22


# --- referring expressions ----------------------------------------------

class EmptyExpression(RefdiffError):
    exit_code = 30


# --- attention maps -----------------------------------------------------

class IndexOutOfRange(RefdiffError):
    exit_code = 40


# --- proposals & scoring ------------------------------------------------

class NoValidProposal(RefdiffError):
    exit_code = 50


class DegenerateMask(RefdiffError):
    exit_code = 51


class ZeroVector(RefdiffError):
    exit_code = 52


class LengthMismatch(RefdiffError):
    exit_code = 53


class EmptyProposalSet(RefdiffError):
    exit_code = 54


# --- evaluation ---------------------------------------------------------

class MissingInput(RefdiffError):
    """A mode requires a manifest field that is absent."""

    exit_code = 60

    def __init__(self, mode: str, field: str):
        super().__init__(f"mode {mode} requires manifest field '{field}'")
        self.mode = mode
        self.field = field


class EmptyDataset(RefdiffError):
    exit_code = 61
