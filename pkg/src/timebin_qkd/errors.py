"""Exception hierarchy shared across the package."""


class TimebinError(Exception):
    """Base class for all package errors."""


class ConfigurationError(TimebinError, ValueError):
    """Invalid frame or bin geometry, or an invalid run configuration."""


class DomainError(TimebinError, ValueError):
    """A numeric argument lies outside the domain of the function."""


class ProtocolError(TimebinError):
    """An assignment message violates the partition rules of its scheme."""


class SerializationError(TimebinError):
    """A message cannot be encoded to, or decoded from, the wire format."""


class BudgetError(TimebinError):
    """The requested exhaustive enumeration is too large."""


class KeyAgreementError(TimebinError):
    """Alice and Bob derived different keys over the ideal channel."""
