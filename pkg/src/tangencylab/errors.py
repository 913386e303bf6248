"""Exception hierarchy shared by every module; the CLI maps each class to an exit code."""


class LabError(Exception):
    exit_code = 1


class ValidationError(LabError, ValueError):
    """A precondition on parameters or configuration does not hold."""

    exit_code = 2


class NumericFailure(LabError, ArithmeticError):
    """An iterative method diverged or a geometric construction left its domain."""

    exit_code = 3


class AssertionFailure(LabError, AssertionError):
    """A verified property or certificate check came out false."""

    exit_code = 4
