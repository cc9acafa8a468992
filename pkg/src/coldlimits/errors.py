"""Exception hierarchy shared by every module.

Each class carries an ``exit_code`` used by the command-line front end.
"""


class ColdLimitsError(Exception):
    exit_code = 1


class InvalidInputError(ColdLimitsError, ValueError):
    """Malformed argument: wrong shape, non-Hermitian, negative rate, ..."""

    exit_code = 2


class DomainError(ColdLimitsError, ValueError):
    """Argument outside the domain where the formula means anything."""

    exit_code = 4


class ModelError(ColdLimitsError, ValueError):
    """Physical model violates a structural requirement (e.g. convexity)."""

    exit_code = 4


class SingularCapacityError(ModelError):
    pass


class InstabilityError(ColdLimitsError, ArithmeticError):
    """Dynamics is not asymptotically stable (pole on the real axis, parametric resonance)."""

    exit_code = 4


class RegimeError(ColdLimitsError, ValueError):
    """A formula was requested outside the regime in which it is valid."""

    exit_code = 4


class ContractError(ColdLimitsError, TypeError):
    """Caller violated an operation precondition (misuse rather than bad data)."""

    exit_code = 2


class AccuracyError(ColdLimitsError, ArithmeticError):
    """Numerical procedure failed to reach the requested tolerance."""

    exit_code = 3

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(ColdLimitsError, ValueError):
    """Configuration text failed to parse or validate."""

    exit_code = 2

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [("", errors)]
        self.errors = list(errors)
        msg = "; ".join(f"{p or '<root>'}: {m}" for p, m in self.errors)
        super().__init__(msg)
