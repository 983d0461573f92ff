"""Exception hierarchy.

Input problems raise ``ValueError`` subclasses; numerical breakdowns raise
``NumericalError`` so callers (the CLI in particular) can tell them apart.
"""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class NumericalError(ArithmeticError):
    """A computation could not be carried out to the required accuracy."""


class SingularCovarianceError(NumericalError):
    """A covariance block needed for a conditional entropy is (near) singular."""


class ConvergenceError(NumericalError):
    """An iterative routine failed to converge."""
