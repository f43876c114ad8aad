"""
Error Types
Exception hierarchy shared by the library and the command-line interface.

InputError subclasses describe bad user data (exit code 1 in the CLI),
ComputationError subclasses describe numerical failures (exit code 2).
"""

from typing import Optional


class ElasticaError(Exception):
    """Base class for every error raised by elastica."""


class InputError(ElasticaError):
    """Malformed or invalid input data."""


class ComputationError(ElasticaError):
    """A numerical operation could not be carried out."""


class ParseError(InputError):
    """
    A document could not be parsed.

    Args:
        message: Human readable description
        line: 1-based line number of the offending input, if known
        field: Name or 1-based index of the offending field, if known
    """

    def __init__(
        self, message: str, line: Optional[int] = None, field: Optional[str] = None
    ):
        self.line = line
        self.field = field
        locus = []
        if line is not None:
            locus.append(f"line {line}")
        if field is not None:
            locus.append(f"field {field}")
        super().__init__(f"{message} ({', '.join(locus)})" if locus else message)


class ValidationError(InputError):
    """A parsed value violates a domain invariant."""


class ZeroLengthCurve(ComputationError):
    """All points of a curve coincide."""


class DimensionMismatch(ComputationError):
    """Two operands disagree in sample count or ambient dimension."""


class InvalidSegment(ComputationError):
    """A DP lattice segment is not monotone."""


class NoPath(ComputationError):
    """The DP strip disconnects (0, 0) from (N, N)."""


class DegenerateCovariance(ComputationError):
    """The Procrustes cross-covariance does not determine a rotation."""


class ProjectionDiverged(ComputationError):
    """Closure projection did not reach the tolerance."""


class LogUndefined(ComputationError):
    """Matrix logarithm requested on the cut locus (rotation angle pi)."""


class AntipodalStep(ComputationError):
    """Consecutive sphere samples are antipodal."""


class AntipodalReference(ComputationError):
    """A sphere sample is antipodal to the TSRV reference point."""
