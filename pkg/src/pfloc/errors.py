"""Exception hierarchy shared by all modules.

The CLI maps these onto its stable exit codes, so keep the classes coarse.
"""


class PflocError(Exception):
    """Base class for every error raised by the package."""


class StructuralError(PflocError, ValueError):
    """Input violates a structural invariant (shape, skew-symmetry, parity of dimension)."""


class DomainError(PflocError, ValueError):
    """A scalar function was evaluated outside its domain."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class PreconditionError(PflocError, ValueError):
    """A mathematical hypothesis (simple spectrum, trivial kernel, ...) fails."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class SizeError(PflocError, ValueError):
    """Requested size exceeds a hard cap of an exponential-cost routine."""


class ParameterError(PflocError, ValueError):
    """Bound parameters are outside the admissible range."""


class DivergenceError(PflocError, ArithmeticError):
    """A series that should converge does not within the iteration budget."""


class FitError(PflocError, ValueError):
    """Too few usable points for a decay fit."""


class SkipOverflowError(PflocError, RuntimeError):
    """Too many ensemble realizations had to be skipped."""

    def __init__(self, message, skipped=0, requested=0):
        super().__init__(message)
        self.skipped = skipped
        self.requested = requested
