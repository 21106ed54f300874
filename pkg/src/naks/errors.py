"""Exception hierarchy shared by every module."""


class NaksError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(NaksError, ValueError):
    pass


class NonPrimeModulus(InvalidInput):
    pass


class InvalidLevel(InvalidInput):
    pass


class MixedRings(InvalidInput):
    pass


class NotAUnit(InvalidInput, ArithmeticError):
    pass


class NotOnSphere(InvalidInput):
    pass


class IndexOutOfRange(InvalidInput, IndexError):
    pass


class EmptySubset(InvalidInput):
    pass


class UnsortedSubset(InvalidInput):
    pass


class WrongDimension(InvalidInput):
    pass


class EnumerationTooLarge(NaksError):
    pass


class TooManySubsets(NaksError):
    pass


class SetTooLarge(NaksError, MemoryError):
    pass


class SumExplosion(NaksError):
    pass


class InvariantViolation(NaksError):
    """A mathematical guarantee failed at runtime; always indicates a bug or bad input data."""


class NonIntegralCount(InvariantViolation):
    pass
