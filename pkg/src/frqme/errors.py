"""Exception hierarchy shared by the library and the CLI."""


class FrqmeError(Exception):
    """Base class for all errors raised by this package."""


class ParamOutOfRange(FrqmeError, ValueError):
    pass


class StateInvariantViolation(FrqmeError, ValueError):
    pass


class NumericalDomain(FrqmeError, ArithmeticError):
    pass


class NumericalFailure(FrqmeError, ArithmeticError):
    """Failure of a numerical routine; the CLI maps these to exit code 2."""


class ExpmFailure(NumericalFailure):
    pass


class ConvergenceFailure(NumericalFailure):
    pass


class BracketFailure(NumericalFailure):
    pass
