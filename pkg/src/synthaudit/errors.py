"""Exception hierarchy shared by all audit modules."""


class AuditError(Exception):
    """Base class for every error raised by synthaudit."""


class DataIOError(AuditError, OSError):
    """A file could not be read or written."""


class SchemaViolation(AuditError, ValueError):
    """A row does not conform to its schema."""

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class SchemaMismatch(AuditError, ValueError):
    pass


class EmptyDataset(AuditError, ValueError):
    pass


class TooSmall(AuditError, ValueError):
    pass


class DuplicateCanary(AuditError, ValueError):
    pass


class BadAttribute(AuditError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class DegenerateAttribute(AuditError, ValueError):
    pass


class IncompatibleMetric(AuditError, ValueError):
    pass


class ZeroVector(AuditError, ValueError):
    pass


class OutOfRange(AuditError, ValueError):
    pass


class EmptyReference(AuditError, ValueError):
    pass


class KTooLarge(AuditError, ValueError):
    pass


class LabelMismatch(AuditError, ValueError):
    pass


class ProfileMismatch(AuditError, ValueError):
    pass


class EmptySample(AuditError, ValueError):
    pass


class NoMatches(AuditError, ValueError):
    pass


class DegenerateBandwidth(AuditError, ValueError):
    pass


class SizeMismatch(AuditError, ValueError):
    pass


class TooFewSeeds(AuditError, ValueError):
    pass


class ZeroDensity(AuditError, ValueError):
    pass


class NotEnoughUniques(AuditError):
    """Fewer unique predicates than requested; ``outcome`` holds the partial run."""

    def __init__(self, message, outcome=None):
        super().__init__(message)
        self.outcome = outcome


class OverlappingAux(AuditError, ValueError):
    pass


class BoxInsufficient(AuditError, PermissionError):
    pass


class FitFailure(AuditError, RuntimeError):
    pass


class BadDomain(AuditError, ValueError):
    pass


class EmptyOutcome(AuditError, ValueError):
    pass


class EmptyCanaries(AuditError, ValueError):
    pass


class EmptyTrain(AuditError, ValueError):
    pass


class BadParams(AuditError, ValueError):
    pass


class NotFitted(AuditError, RuntimeError):
    pass


class ConfigError(AuditError, ValueError):
    pass
