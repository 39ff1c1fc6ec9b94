"""Exception types shared by every evaluator."""

from __future__ import annotations


class DomainError(ValueError):
    """Arguments outside the region where an evaluator is defined."""


class NonConvergence(ArithmeticError):
    """A series hit its term budget before reaching tolerance.

    ``result`` holds the partial :class:`~hharmonic.hypergeom.EvalResult`
    (``converged`` is False) so callers can report how far the sum got.
    ``required_depth`` is set by table-driven sums that ran out of table.
    """

    def __init__(self, message, result=None, required_depth=None):
        super().__init__(message)
        self.result = result
        self.required_depth = required_depth
