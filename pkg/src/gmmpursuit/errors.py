"""Exception types shared across the package."""


class GmmPursuitError(Exception):
    """Base class for errors raised by this package."""


class DataError(GmmPursuitError):
    """Malformed input: bad shapes, non-finite values, unparsable files."""


class FitError(GmmPursuitError):
    """Estimation failed: degenerate components, no usable restart."""


class NumericalError(GmmPursuitError):
    """Numerical breakdown: non positive definite matrix, underflow."""
