"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An operation was called with arguments outside its domain."""


class StandingAssumptionError(PreconditionError):
    """A sphere section S_r ∩ Ω turned out to be empty."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message, residual=None, history=None):
        super().__init__(message)
        self.residual = residual
        self.history = list(history) if history is not None else []


class RegimeError(PreconditionError):
    """An estimate was requested outside the exponent regime it covers."""


class DataError(ValueError):
    """Profile data is unusable (negative values, too few samples, ...)."""


class RefusedError(RuntimeError):
    """A bound was refused because one of its hypotheses is not met."""


class LawViolation(AssertionError):
    """A capacity law failed beyond its discretisation tolerance."""

    def __init__(self, law, detail):
        super().__init__(f"{law}: {detail}")
        self.law = law
        self.detail = detail
