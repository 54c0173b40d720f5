"""Exception types shared across the package."""
from __future__ import annotations


class ValidationError(ValueError):
    """Invalid input data, inconsistent dimensions, or a violated invariant."""


class InfeasibleError(ValueError):
    """The constraint set admits no feasible design.

    The ``certificate`` attribute names the violated aggregate, e.g.
    ``{"sum_min": 12, "J": 10}`` when the lower bounds alone exceed the
    total number of trials.
    """

    def __init__(self, message: str, certificate: dict | None = None):
        super().__init__(message)
        self.certificate = dict(certificate or {})


class NumericalError(RuntimeError):
    """A required factorization or linear solve failed."""
