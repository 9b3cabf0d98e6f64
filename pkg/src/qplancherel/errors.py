"""Exception hierarchy shared by every module of the package."""


class QPlancherelError(Exception):
    """Base class for all errors raised by qplancherel."""


class DomainError(QPlancherelError, ValueError):
    """An argument lies outside the domain of the operation."""


class NSmall(DomainError):
    """The degree ``n`` is too small for a regime's preconditions (``nu_n < 1``)."""


class TailNotConverged(QPlancherelError, ArithmeticError):
    """A series could not be certified to the requested tolerance within the iteration cap."""


class AmbiguousFloor(QPlancherelError, ArithmeticError):
    """The integer part of a value cannot be decided at the available precision."""


class PrecisionExhausted(QPlancherelError, ArithmeticError):
    """The available precision cannot certify a required inequality or phase."""


class ScaleOverflow(QPlancherelError, OverflowError):
    """A raw (unnormalized) quantity is too large to materialize; use the normalized form."""
