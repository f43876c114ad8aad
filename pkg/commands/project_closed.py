"""
Project-Closed Command
Projects a curve in R^d onto the closed curves.
"""

import argparse
import logging

from commands.options import add_curve_options, add_output_option, load_curves, positive_int, write_output
from data.cast_types import curve_document
from data.curve_files import write_curve_document
from utils.errors import ValidationError
from utils.shapes import CLOSURE_TOL, PROJECTION_MAX_ITER, project_closed

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser("project-closed", help="close a curve in R^d")
    parser.add_argument("file", metavar="A")
    parser.add_argument("--tol", type=float, default=CLOSURE_TOL)
    parser.add_argument("--max-iter", type=positive_int, default=PROJECTION_MAX_ITER)
    add_curve_options(parser, mode=False)
    add_output_option(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    if args.tol <= 0.0:
        raise ValidationError("--tol must be positive")
    (curve,), space = load_curves([args.file], args)
    if space != "rd":
        raise ValidationError("closure projection is available for rd curves only")
    closed = project_closed(curve, args.tol, args.max_iter)
    logger.info(f"Closure gap {closed.closure_gap:.3g}")
    write_output(write_curve_document(curve_document(closed)), args.output)
    return 0
