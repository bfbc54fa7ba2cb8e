"""Command-line entry point."""

from .cli import cli


def main():
    """Run the CLI."""
    cli(prog_name="qsat")


if __name__ == "__main__":
    main()
