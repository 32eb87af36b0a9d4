"""Exception types raised across the package."""


class GJMSError(Exception):
    """Base class."""


class ConfigError(GJMSError, ValueError):
    """Invalid parameters (integer gamma, gamma >= n/2, bad index, ...)."""


class PoleError(GJMSError, ValueError):
    """A Gamma argument sits on a pole."""


class IncompatibleLadderError(GJMSError, ValueError):
    """Series on different exponent ladders were combined."""


class OrderExhaustedError(GJMSError):
    """A series is too short for the requested operation."""


class IndeterminateLimitError(GJMSError, ArithmeticError):
    """An epsilon-limit quotient diverges."""


class NonintegrableError(GJMSError, ValueError):
    """Endpoint exponent <= -1."""


class DivergingCoefficientError(GJMSError):
    """A negative power failed to cancel inside a boundary operator."""


class ResonanceError(GJMSError):
    """Frobenius indices differ by an integer (logarithmic branch)."""


class MatchingError(GJMSError):
    """Ill-conditioned connection problem."""


class TruncationError(GJMSError):
    """A series expansion did not reach its tail tolerance."""
