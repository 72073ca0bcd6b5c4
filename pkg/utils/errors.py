"""Error types raised by the solext back end."""


class SolextError(Exception):
    """Base class for every error raised by solext."""


class OrderingViolation(SolextError, ValueError):
    """Domain half-sides violate L > a >= b >= c > 0."""


class WrongDimension(SolextError, ValueError):
    """Operation requested in a dimension where it is not defined."""


class ValidationFailed(SolextError):
    """Boundary datum failed the admissibility checks."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class OutsideQ(SolextError, ValueError):
    """Point lies outside the closed outer box."""


class OnInterface(SolextError, ValueError):
    """Gradient requested on a region interface where it is undefined."""


class QuadratureFailure(SolextError, ArithmeticError):
    """Adaptive quadrature did not converge."""


class NotZeroMean(SolextError, ValueError):
    """Scalar datum does not have zero mean on the perforated domain."""


class TooCloseToBoundary(SolextError, ValueError):
    """Finite-difference stencil would leave the evaluation region."""


class DataParseError(SolextError, ValueError):
    """Face data or configuration could not be parsed."""
