"""Exception hierarchy for the simulator."""


class QSMSError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(QSMSError, ValueError):
    pass


class UnknownQudit(QSMSError, KeyError):
    pass


class MemoryGuardError(QSMSError, MemoryError):
    """Raised when a dense register would exceed the amplitude budget."""


class EngineIdentityError(QSMSError, AssertionError):
    """An internal consistency identity failed. Always a bug, never user error."""


class ConfigError(QSMSError, ValueError):
    pass


class NotUnitaryError(QSMSError, ValueError):
    pass


class IncompleteTranscript(QSMSError, ValueError):
    pass
