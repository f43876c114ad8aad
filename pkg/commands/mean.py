"""
Mean Command
Writes the elastic mean of a collection of curves in R^d.
"""

import argparse
import logging

from commands.options import (
    add_curve_options,
    add_match_options,
    add_output_option,
    load_curves,
    match_options,
    positive_int,
    write_output,
)
from data.cast_types import curve_document
from data.curve_files import write_curve_document
from utils.errors import ValidationError
from utils.formatting import format_energy_trace
from utils.stats_aggregation import MEAN_ITERS, srv_mean_details

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser("mean", help="elastic mean of curves in R^d")
    parser.add_argument("files", nargs="+", metavar="F")
    parser.add_argument("--iters", type=positive_int, default=MEAN_ITERS, metavar="K")
    add_curve_options(parser, mode=False)
    add_match_options(parser)
    add_output_option(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    curves, space = load_curves(args.files, args)
    if space != "rd":
        raise ValidationError("the elastic mean is available for rd curves only")
    result = srv_mean_details(curves, args.iters, match_options(args))
    logger.info(f"Mean objective: {format_energy_trace(result.objective_trace)}")
    write_output(write_curve_document(curve_document(result.template)), args.output)
    return 0
