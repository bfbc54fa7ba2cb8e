"""Custom exception hierarchy for the QSAT toolkit."""


class QSATException(Exception):
    """Base exception for all toolkit errors."""

    pass


class ConfigurationException(QSATException):
    """Invalid or missing configuration."""

    pass


class GraphException(QSATException):
    """Invalid interaction graph or impossible ensemble parameters."""

    pass


class LimitExceededException(QSATException):
    """A configured size limit was exceeded."""

    def __init__(self, message: str, limit: int | None = None):
        super().__init__(message)
        self.limit = limit


class DimensionMismatchException(QSATException):
    """Vector or matrix dimensions do not match the graph."""

    pass


class MatchingException(QSATException):
    """A matching is invalid or is not a dimer covering."""

    pass


class ProjectorException(QSATException):
    """Projector set is malformed or lacks the required form."""

    pass


class ContinuationException(QSATException):
    """Homotopy continuation left the generic path."""

    def __init__(self, message: str, step: int | None = None, reason: str = "newton"):
        super().__init__(message)
        self.step = step
        self.reason = reason


class CrossingException(QSATException):
    """A probability curve does not bracket the requested level."""

    pass


class QuadratureException(QSATException):
    """Numerical integration or special-function evaluation failed."""

    pass


class BracketException(QSATException):
    """No sign change could be bracketed for a root search."""

    pass


class StateException(QSATException):
    """Product state has the wrong shape or non-unit factors."""

    pass
