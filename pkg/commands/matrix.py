"""
Matrix Command
Writes the pairwise distance matrix of every curve file in a directory.
"""

import argparse
import logging
from pathlib import Path

from commands.options import (
    add_curve_options,
    add_match_options,
    add_output_option,
    load_curves,
    match_options,
    resolve_mode,
    write_output,
)
from data.curve_files import write_distance_matrix
from utils.errors import ValidationError
from utils.stats_aggregation import distance_matrix

logger = logging.getLogger(__name__)

CURVE_SUFFIXES = (".json", ".csv")


def register(subparsers):
    parser = subparsers.add_parser("matrix", help="pairwise distances of a directory of curves")
    parser.add_argument("directory", metavar="DIR")
    add_curve_options(parser)
    add_match_options(parser)
    add_output_option(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        raise ValidationError(f"{directory} is not a directory")
    paths = sorted(
        path for path in directory.iterdir() if path.is_file() and path.suffix in CURVE_SUFFIXES
    )
    if not paths:
        raise ValidationError(f"no curve files in {directory}")
    if args.output is not None:
        paths = [path for path in paths if path.resolve() != Path(args.output).resolve()]

    curves, space = load_curves([str(path) for path in paths], args)
    mode = resolve_mode(space, args.mode)
    matrix = distance_matrix(
        curves,
        mode,
        match_options(args),
        labels=[path.name for path in paths],
        reference_point=args.ref_point,
    )
    write_output(write_distance_matrix(matrix), args.output)
    return 0
