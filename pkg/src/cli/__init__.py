"""Command-line layer."""

from .commands import cli

__all__ = ["cli"]
