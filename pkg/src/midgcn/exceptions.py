"""Exception hierarchy shared by the library and the command line."""


class MidGCNError(Exception):
    """Base class for all errors raised by :mod:`midgcn`."""

    exit_code = 1


class ConfigError(MidGCNError, ValueError):
    """Invalid configuration or hyperparameter."""

    exit_code = 2


class DataError(MidGCNError, ValueError):
    """Malformed, missing or inconsistent input data."""

    exit_code = 3


class PerturbationError(DataError):
    """An edge operation that is not valid against the graph it targets."""


class NumericalError(MidGCNError, ArithmeticError):
    """Non-finite values, divergence or solver non-convergence."""

    exit_code = 4
