"""Exception and warning types.

Precondition reports from the lemma checkers (``HypothesisFail``,
``GeometryFail``, ``KappaFail``) are not lemma failures: they say the
instance lies outside the statement being certified.
"""


class QuasiboundError(Exception):
    """Base class for all errors raised by this package."""


class EmptySet(QuasiboundError, ValueError):
    pass


class DegreeOrder(QuasiboundError, ValueError):
    pass


class BadMeasure(QuasiboundError, ValueError):
    pass


class BadSequence(QuasiboundError, ValueError):
    pass


class ZeroPolynomial(QuasiboundError, ValueError):
    pass


class EvenDegree(QuasiboundError, ValueError):
    pass


class NoConvergence(QuasiboundError, RuntimeError):
    def __init__(self, message, max_iter=None, bracket=None, result=None):
        super().__init__(message)
        self.max_iter = max_iter
        self.bracket = bracket
        self.result = result


class BudgetExceeded(QuasiboundError, RuntimeError):
    """A cell, degree or search budget ran out; ``partial`` holds what was reached."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class PrecisionLoss(QuasiboundError, ArithmeticError):
    pass


class NoFeasible(QuasiboundError, ValueError):
    pass


class PreconditionReport(QuasiboundError):
    """Instance is outside the hypotheses of the statement being checked."""

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


class HypothesisFail(PreconditionReport):
    pass


class GeometryFail(PreconditionReport):
    pass


class KappaFail(PreconditionReport):
    pass


class NoMEps(QuasiboundError, ValueError):
    pass


class ConstantMismatch(QuasiboundError, RuntimeError):
    def __init__(self, message, measured=None):
        super().__init__(message)
        self.measured = measured


class ExtrapolationWarning(UserWarning):
    pass


class DegenerateThreshold(UserWarning):
    """Threshold at or above the sup norm: the sublevel set is all of [-1, 1]."""


class DepthLimit(UserWarning):
    """N-adic descent stopped at its depth limit; residual mass is reported."""
