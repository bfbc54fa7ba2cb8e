"""Structured logging configuration with structlog.

Events go to stderr; stdout is reserved for the CLI's JSON results. Each
service logs under its own ``component`` and scan workers are told apart
by process id.
"""

import logging
import sys
from typing import Any, TextIO

import numpy as np
import structlog

from ..core.config import get_settings


def numpy_to_builtin(_logger: Any, _method: str, event_dict: dict[str, Any]) -> dict[str, Any]:
    """Replace numpy scalars and arrays so the JSON renderer keeps them as numbers."""
    for key, value in event_dict.items():
        if isinstance(value, np.generic):
            event_dict[key] = value.item()
        elif isinstance(value, np.ndarray):
            event_dict[key] = value.tolist()
        elif isinstance(value, (list, tuple)) and any(isinstance(v, np.generic) for v in value):
            event_dict[key] = [v.item() if isinstance(v, np.generic) else v for v in value]
    return event_dict


def configure_logging(
    level: str | None = None, fmt: str | None = None, stream: TextIO | None = None
) -> None:
    """Configure structured logging from ``QSAT_LOG_LEVEL`` and ``QSAT_LOG_FORMAT``."""
    settings = get_settings()
    log_level = getattr(logging, (level or settings.LOG_LEVEL).upper(), logging.INFO)
    renderer = (
        structlog.dev.ConsoleRenderer(colors=False)
        if (fmt or settings.LOG_FORMAT) == "console"
        else structlog.processors.JSONRenderer(sort_keys=True)
    )

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            structlog.processors.CallsiteParameterAdder([structlog.processors.CallsiteParameter.PROCESS]),
            numpy_to_builtin,
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(log_level),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=stream or sys.stderr),
        cache_logger_on_first_use=True,
    )


def get_logger(component: str | None = None):
    """Get a logger, bound to ``component`` when given."""
    if component is None:
        return structlog.get_logger()
    return structlog.get_logger(component=component)


# Configure on import
configure_logging()
