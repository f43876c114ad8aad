"""
elastica
Main entry point for the command-line interface to elastic shape analysis
of curves in R^d, SO(n) and S^2.
"""

import argparse
import logging
import sys
from typing import List, Optional

from commands import dist, geodesic, match, matrix, mean, project_closed
from utils.errors import ComputationError, InputError

logger = logging.getLogger("elastica")

COMMANDS = (dist, geodesic, match, matrix, mean, project_closed)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_COMPUTATION = 2


class ElasticaArgumentParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with status 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = ElasticaArgumentParser(
        prog="elastica",
        description="Elastic distances, geodesics and means of sampled curves.",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="log progress to stderr (-vv for debug output)",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def configure_logging(verbosity: int):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logging.getLogger().setLevel(level)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one elastica command.

    Args:
        argv: Command-line arguments without the program name (default sys.argv)

    Returns:
        Exit status: 0 on success, 1 on usage or input errors, 2 on
        computation errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    configure_logging(args.verbose)
    logger.debug(f"Running {args.command}")
    try:
        return args.handler(args)
    except InputError as e:
        print(f"elastica {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ComputationError as e:
        print(f"elastica {args.command}: {e}", file=sys.stderr)
        return EXIT_COMPUTATION


if __name__ == "__main__":
    sys.exit(main())
