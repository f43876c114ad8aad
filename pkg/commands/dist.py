"""
Distance Command
Prints the elastic distance between two curves.
"""

import argparse
import logging

from commands.options import (
    add_curve_options,
    add_match_options,
    load_curves,
    match_options,
    resolve_mode,
)
from utils.formatting import format_distance
from utils.stats_aggregation import DISTANCE_MODES

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser("dist", help="distance between two curves")
    parser.add_argument("first", metavar="A")
    parser.add_argument("second", metavar="B")
    add_curve_options(parser)
    add_match_options(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    (c0, c1), space = load_curves([args.first, args.second], args)
    mode = resolve_mode(space, args.mode)
    distance = DISTANCE_MODES[mode](c0, c1, match_options(args), args.ref_point)
    logger.info(f"{mode} distance computed")
    print(format_distance(distance))
    return 0
