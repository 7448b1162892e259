"""Exception types shared across the package."""


class QamError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(QamError):
    """A verifier spec is malformed: missing operator-table entry, missing
    transition, incomplete superoperator, or head driven off the tape."""


class ProtocolError(QamError):
    """The prover side broke the communication contract (too few responses,
    an unknown response symbol, or a response timeout).  Distinct from the
    verifier rejecting the input."""


class ConsistencyError(QamError):
    """Two independent computation routes that must agree exactly did not."""


class GuardError(QamError):
    """An exhaustive enumeration was refused because the input exceeds the
    configured size guard."""
