"""Exception types raised across the package."""


class ComGraspError(Exception):
    """Base class for all package errors."""


class InvalidInput(ComGraspError, ValueError):
    """Input violates a documented precondition (shape, range, pairing)."""


class UnobservableError(ComGraspError):
    """The torque design matrix has rank < 3; the payload cannot be identified."""


class DivergenceError(ComGraspError):
    """Gradient descent objective kept increasing."""


class NonphysicalWeightError(ComGraspError):
    """Estimated object weight is not positive."""


class SingularPoseError(ComGraspError):
    """Object transform has |r33| too small for the rod projection."""


class EmptyMaskError(ComGraspError):
    """Rendered mask has no occupied pixel."""


class AmbiguousOrientationError(ComGraspError):
    """Rectangle is nearly square, so the rod direction is undefined."""


class ObservationUnavailableError(ComGraspError):
    """Side view cannot see enough of the rod."""


class RecordParseError(ComGraspError, ValueError):
    """Malformed snapshot, chain or scene record."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
