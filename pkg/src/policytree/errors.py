"""Exception types raised across the package.

Every error carries a short machine-readable ``code`` (the class name) so the
CLI can print a one-line ``error: <code>: <message>`` reason.
"""


class PolicyTreeError(ValueError):
    """Base class for validation errors."""

    @property
    def code(self):
        return type(self).__name__


class MissingColumn(PolicyTreeError):
    pass


class NoTreatments(PolicyTreeError):
    pass


class EmptyAfterCleaning(PolicyTreeError):
    pass


class NonFiniteScore(PolicyTreeError):
    pass


class SchemaError(PolicyTreeError):
    pass


class BadProportions(PolicyTreeError):
    pass


class SpecMismatch(PolicyTreeError):
    pass


class SchemaVersionUnsupported(PolicyTreeError):
    pass


class MalformedTree(PolicyTreeError):
    pass


class TooFewRows(PolicyTreeError):
    pass


class BadConfig(PolicyTreeError):
    pass


class Infeasible(PolicyTreeError):
    pass


class DimensionMismatch(PolicyTreeError):
    pass


class BadShares(PolicyTreeError):
    pass


class LengthMismatch(PolicyTreeError):
    pass


class BadSpec(PolicyTreeError):
    pass


class SearchTimeout(RuntimeError):
    """Raised when a search exceeds its wall-clock budget."""
