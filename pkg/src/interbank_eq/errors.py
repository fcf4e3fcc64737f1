"""Typed failure modes shared across the solvers and the CLI."""


class NoPreimage(ValueError):
    """Requested density level exceeds f(0); the inverse does not exist.

    Callers solving first-order conditions map this to the zero-cash corner.
    """


class InfiniteCash(ValueError):
    """r = 0 makes liquidity free and the optimal cash reserve unbounded."""


class NonConvergence(RuntimeError):
    """Iteration cap hit before the convergence tolerance was met."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class UnsupportedUtility(ValueError):
    """Planner-side computations require logarithmic utility for every bank."""


class IllDefinedRatio(ArithmeticError):
    """Welfare ratio denominator is non-positive (log utilities can be)."""


class NotApplicable(ValueError):
    """Asymptotic quantity requested for a bank outside its hypotheses."""


class BoundNotActive(ValueError):
    """Asymptotic bound has a non-positive log argument at this n."""


class NoBracket(ValueError):
    """Root finder called without a sign change on the bracket."""


class InvariantBreach(RuntimeError):
    """A structural invariant failed; indicates a bug, not a user error."""
