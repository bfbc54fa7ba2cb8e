"""Core infrastructure modules."""

from .config import Settings, get_settings
from .exceptions import (
    QSATException,
    ConfigurationException,
    GraphException,
    LimitExceededException,
    DimensionMismatchException,
    MatchingException,
    ProjectorException,
    ContinuationException,
    CrossingException,
    QuadratureException,
    BracketException,
    StateException,
)

__all__ = [
    "Settings",
    "get_settings",
    "QSATException",
    "ConfigurationException",
    "GraphException",
    "LimitExceededException",
    "DimensionMismatchException",
    "MatchingException",
    "ProjectorException",
    "ContinuationException",
    "CrossingException",
    "QuadratureException",
    "BracketException",
    "StateException",
]
