"""Exception types shared across the package.

Numerical checks that *diagnose* data (validation reports, residual blocks)
do not raise; exceptions are reserved for contract violations and for
failures that leave no usable result.
"""

from __future__ import annotations


class WhithamError(Exception):
    """Base class for all package errors."""


class DegreeBoundError(WhithamError):
    """A polynomial exceeds the degree bound of the section space it claims."""


class ZeroPolynomialError(WhithamError):
    """Roots (or a gcd) of the zero polynomial were requested."""


class NumericalFailureError(WhithamError):
    """An iteration failed to converge. Carries the best iterate found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class NoSolutionError(WhithamError):
    """gcd(A, B) does not divide C, so AX - BY = C has no solution."""


class RealityViolationError(WhithamError):
    """Input is not (close enough to) a real section, or its roots cannot be
    paired under the conjugate-inverse involution."""


class CircleRootError(WhithamError):
    """P has a root on the unit circle."""


class MultipleRootError(WhithamError):
    """P has a repeated root (singular spectral curve)."""


class PathConstructionError(WhithamError):
    """A homology cycle or closing path could not be routed around the
    branch points and marked points. Carries a diagnostic message."""


class GeometryError(WhithamError):
    """An integration path runs through a pole or branch point."""


class StepSizeError(WhithamError):
    """A finite-difference or flow step left the admissible set."""


class NotDeformableError(WhithamError):
    """Tangent construction requested in a non-deformable case (c)/(d)/(f).

    For case (c) the ``indicator`` attribute holds the scalar whose vanishing
    would make the reduced equation solvable at the deformation degree.
    """

    def __init__(self, message, case=None, indicator=None):
        super().__init__(message)
        self.case = case
        self.indicator = indicator


class InternalInconsistencyError(WhithamError):
    """The two reduced equations could not be reconciled to a common P-dot;
    signals that the input triple was not actually a point of the moduli set."""


class DegenerateKernelError(WhithamError):
    """The R function does not have real rank 1 on the quadratic sections,
    so no kernel basis is fabricated."""


class SingularOperatorError(WhithamError):
    """The homogeneous recovery operator is numerically rank-deficient,
    contradicting the nonsingular-curve assumption."""


class ProjectionFailureError(WhithamError):
    """Gauss-Newton projection diverged or left the admissible set.
    ``trace`` holds the residual-norm history."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class UndefinedConformalTypeError(WhithamError):
    """Conformal type tau = b2_0/b1_0 requested where b1_0 = 0."""
