"""Exception hierarchy.

``DomainError`` subclasses signal invalid inputs to a computation (CLI exit
code 1); ``ConfigError`` signals malformed configuration (CLI exit code 2).
"""


class DomainError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class AbsolutelyContinuityViolated(DomainError):
    pass


class BadOrder(DomainError):
    pass


class BadParam(DomainError):
    pass


class InvalidPmf(DomainError):
    pass


class DegenerateChannel(DomainError):
    pass


class AlphabetTooLarge(DomainError):
    pass


class BadWindow(DomainError):
    pass


class BadShape(DomainError):
    pass


class Disconnected(DomainError):
    pass


class TooLargeToEnumerate(DomainError):
    pass


class MissingCoordinates(DomainError):
    pass


class LengthMismatch(DomainError):
    pass


class SearchSpaceTooLarge(DomainError):
    pass


class PreconditionViolated(DomainError):
    pass


class InfeasibleConfig(DomainError):
    pass


class NoCrossing(DomainError):
    pass
