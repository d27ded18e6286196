"""Typed errors shared across the package.

``DegeneracyError`` groups the statistical failure modes (the requested
quantity is undefined for the data at hand); the CLI maps these to exit
code 2, everything else to exit code 1.
"""


class SepcovError(Exception):
    """Base class for all package errors."""


class DegeneracyError(SepcovError):
    """Statistical degeneracy: the quantity is undefined for this data."""


class NotSymmetric(SepcovError):
    """Input matrix is not symmetric within tolerance."""


class NegativeEigenvalue(DegeneracyError):
    """Matrix is materially non-PSD where positive semi-definiteness is required."""


class SingularMatrix(DegeneracyError):
    """Matrix is singular at the requested relative tolerance; whitening impossible."""


class DimensionTooLarge(SepcovError):
    """Dense 4-index covariance requested beyond the small-grid cap."""


class EmptySample(SepcovError):
    """Too few replicates for the requested estimate."""


class DegenerateSample(DegeneracyError):
    """All replicates identical: zero total variance, normalization undefined."""


class ShapeMismatch(SepcovError):
    """Paired sample sets do not share (n, d1, d2)."""


class ZeroEigenvalue(DegeneracyError):
    """A requested eigendirection has (numerically) zero eigenvalue product."""


class DegenerateVariance(DegeneracyError):
    """The variance estimate for a projection statistic is numerically zero."""


class NonRectangularSet(SepcovError):
    """Operation requires a rectangular projection set {1..p} x {1..q}."""


class InvalidArgument(SepcovError):
    """Argument outside the operation's domain."""


class ParseError(SepcovError):
    """Malformed input file."""
