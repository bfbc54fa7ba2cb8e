"""Exception handling for CLI commands."""

import json

import click

from ..core.exceptions import ContinuationException, LimitExceededException, QSATException
from ..utils.logger import get_logger
from .models import ErrorPayload

logger = get_logger("cli")

EXIT_FAILURE = 1


def error_payload(exc: QSATException, subcommand: str | None) -> ErrorPayload:
    """Build the stderr payload for a toolkit exception."""
    details: dict = {}
    if isinstance(exc, LimitExceededException) and exc.limit is not None:
        details["limit"] = exc.limit
    if isinstance(exc, ContinuationException):
        details["step"] = exc.step
        details["reason"] = exc.reason
    return ErrorPayload(
        error=str(exc),
        error_type=type(exc).__name__,
        subcommand=subcommand,
        details=details,
    )


class QSATGroup(click.Group):
    """Command group that turns toolkit exceptions into exit code 1.

    Usage errors keep click's own handling (exit code 2).
    """

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except QSATException as exc:
            subcommand = ctx.invoked_subcommand
            logger.error(
                "command_failed",
                subcommand=subcommand,
                error_type=type(exc).__name__,
                error_message=str(exc),
            )
            payload = error_payload(exc, subcommand)
            click.echo(json.dumps(payload.model_dump(), sort_keys=True), err=True)
            ctx.exit(EXIT_FAILURE)
