"""Exception hierarchy shared across the library."""


class ProtobankError(Exception):
    """Base class for all library errors."""


class ValidationError(ProtobankError):
    """Input data violates a structural precondition (NaN payload, bad label, ...)."""


class DimensionError(ValidationError):
    """Vector dimensions disagree."""


class DegenerateVectorError(ValidationError):
    """Operation undefined on a zero-norm vector."""


class SplitError(ProtobankError):
    """Requested task split is infeasible."""


class ProtocolError(ProtobankError):
    """Stream violates the class-incremental protocol (class reappearance, duplicate ids)."""


class EmptyGroupError(ProtobankError):
    """A class group with no feature vectors was offered to the bank."""


class EmptyBankError(ProtobankError):
    """Prediction requested against a bank with no (eligible) prototypes."""


class FormatError(ProtobankError):
    """Binary payload is corrupt, truncated, or has the wrong magic/version."""
