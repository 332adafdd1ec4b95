"""Exception hierarchy shared by the library and the command-line tool."""


class QSwitchError(Exception):
    """Base class for all errors raised by :mod:`qswitch`."""

    exit_code = 1


class ParameterError(QSwitchError, ValueError):
    """Invalid physical parameters, inputs, or configuration."""

    exit_code = 2


class InstabilityError(QSwitchError, ArithmeticError):
    """A dynamics matrix fails the stability condition; the integral diverges."""

    exit_code = 3


class NumericalFailure(QSwitchError, ArithmeticError):
    """A numerical procedure could not reach its accuracy contract."""

    exit_code = 3


class ValidationFailure(QSwitchError):
    """An independent cross-check disagreed beyond its tolerance."""

    exit_code = 4
