"""Exception hierarchy shared by every module.

All errors derive from :class:`BSGapsError` so callers (the CLI in
particular) can map them to exit codes in one place.
"""


class BSGapsError(Exception):
    """Base class for all package errors."""


class InvalidParameter(BSGapsError, ValueError):
    pass


class InvalidMetric(BSGapsError, ValueError):
    pass


class InvalidPotential(BSGapsError, ValueError):
    pass


class InvalidArity(BSGapsError, ValueError):
    pass


class InvalidInput(BSGapsError, ValueError):
    pass


class DependentInput(BSGapsError, ValueError):
    pass


class InternalError(BSGapsError, RuntimeError):
    pass


class BasisTooLarge(BSGapsError, RuntimeError):
    pass


class EigenFailure(BSGapsError, RuntimeError):
    pass


class EnumerationTooLarge(BSGapsError, RuntimeError):
    pass


class OutsideAnnulus(BSGapsError, ValueError):
    pass


class NotResonant(BSGapsError, ValueError):
    pass


class NotConverged(BSGapsError, RuntimeError):
    pass


class ResonantDenominator(BSGapsError, ArithmeticError):
    pass


class InadmissibleInstance(BSGapsError, ValueError):
    pass


class GenerationFailed(BSGapsError, RuntimeError):
    pass


class Uncertified(BSGapsError, ValueError):
    """Requested energies lie above the range a truncated basis can vouch for."""
