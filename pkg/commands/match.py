"""
Match Command
Aligns the second curve onto the first and writes the optimal warp,
rotation and starting-point shift.
"""

import argparse
import logging

from commands.options import (
    add_curve_options,
    add_match_options,
    add_output_option,
    load_curves,
    match_options,
    write_output,
)
from data.curve_files import write_match_document
from utils.errors import ValidationError
from utils.formatting import format_energy_trace
from utils.rotations import dist_lie_shape
from utils.shapes import dist_shape
from utils.sphere import dist_sphere_shape

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser("match", help="optimal alignment of B onto A")
    parser.add_argument("first", metavar="A")
    parser.add_argument("second", metavar="B")
    add_curve_options(parser, mode=False)
    add_match_options(parser)
    add_output_option(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    (c0, c1), space = load_curves([args.first, args.second], args)
    opts = match_options(args)

    if space == "rd":
        result = dist_shape(c0, c1, opts)
        logger.info(f"Alignment energies: {format_energy_trace(result.energy_trace)}")
        payload = write_match_document(
            result.distance, result.gamma, result.rotation, result.seed_shift
        )
    elif space == "so_n":
        distance, gamma = dist_lie_shape(c0, c1, opts)
        payload = write_match_document(distance, gamma)
    elif space == "s2":
        result = dist_sphere_shape(c0, c1, opts)
        logger.info(f"Alignment energies: {format_energy_trace(result.energy_trace)}")
        payload = write_match_document(
            result.distance, result.gamma, fiber_angle=result.theta
        )
    else:
        raise ValidationError(f"matching is not supported for space {space!r}")

    write_output(payload, args.output)
    return 0
