"""
Option Components
Reusable command-line options shared by the elastica commands, and the
helpers that turn parsed options into library settings and typed curves.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from data.cast_types import Curve, cast_curve, resample_curves
from data.curve_files import read_curve_file
from utils.errors import ValidationError
from utils.reparam import DpConfig
from utils.shapes import ShapeMatchOptions

logger = logging.getLogger(__name__)

SPACE_CHOICES = ("rd", "so_n", "s2", "s2-tsrv")
MODE_CHOICES = ("param", "shape")

# (space, mode) -> distance mode of utils.stats_aggregation.DISTANCE_MODES
SPACE_MODES = {
    ("rd", "param"): "param",
    ("rd", "shape"): "shape",
    ("so_n", "param"): "lie",
    ("so_n", "shape"): "lie-shape",
    ("s2", "param"): "sphere",
    ("s2", "shape"): "sphere-shape",
    ("s2-tsrv", "param"): "tsrv",
}


def reference_point(text: str) -> np.ndarray:
    """
    Parse an "x,y,z" reference point, normalizing it onto the sphere.

    Raises:
        argparse.ArgumentTypeError: If the point is malformed or not unit length
    """
    try:
        point = np.array([float(part) for part in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid reference point {text!r}")
    if point.shape != (3,) or abs(np.linalg.norm(point) - 1.0) >= 1e-6:
        raise argparse.ArgumentTypeError(f"reference point {text!r} is not a unit vector in R^3")
    return point / np.linalg.norm(point)


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def nonnegative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {value}")
    return value


def add_curve_options(parser: argparse.ArgumentParser, mode: bool = True):
    """
    Add the space, mode and resampling options.

    Args:
        parser: Command parser
        mode: Whether the command distinguishes parametrized and shape mode
    """
    parser.add_argument(
        "--space",
        choices=SPACE_CHOICES,
        default=None,
        help="geometry of the curves (default: the space of the first document)",
    )
    if mode:
        parser.add_argument("--mode", choices=MODE_CHOICES, default="param")
    parser.add_argument(
        "--resample",
        type=positive_int,
        default=None,
        metavar="N",
        help="resample rd curves by arclength to N intervals",
    )


def add_match_options(parser: argparse.ArgumentParser):
    """Add the quotient and optimizer options of shape matching."""
    parser.add_argument("--no-rotation", action="store_true", help="do not optimize rotations")
    parser.add_argument("--no-reparam", action="store_true", help="do not optimize warps")
    parser.add_argument("--dp-width", type=positive_int, default=3, metavar="W")
    parser.add_argument("--strip", type=nonnegative_int, default=None, metavar="S")
    parser.add_argument("--refine", action="store_true", help="gradient-refine DP warps")
    parser.add_argument("--seed-stride", type=positive_int, default=1, metavar="K")
    parser.add_argument("--outer-iters", type=positive_int, default=5, metavar="K")
    parser.add_argument(
        "--ref-point",
        type=reference_point,
        default=None,
        metavar="x,y,z",
        help="TSRV reference point (default: start of the first curve)",
    )


def add_output_option(parser: argparse.ArgumentParser):
    parser.add_argument("-o", "--output", default=None, help="output file (default: stdout)")


def match_options(args: argparse.Namespace) -> ShapeMatchOptions:
    """Shape matching settings from parsed options."""
    return ShapeMatchOptions(
        quotient_rotation=not args.no_rotation,
        quotient_reparam=not args.no_reparam,
        outer_iters=args.outer_iters,
        dp=DpConfig(neighborhood_width=args.dp_width, strip_halfwidth=args.strip),
        refine=args.refine,
        seed_stride=args.seed_stride,
    )


def resolve_mode(space: str, mode: str) -> str:
    """
    Distance mode for a space and a parametrized/shape choice.

    Raises:
        ValidationError: If the combination is not supported
    """
    if (space, mode) not in SPACE_MODES:
        raise ValidationError(f"mode {mode!r} is not supported for space {space!r}")
    return SPACE_MODES[(space, mode)]


def load_curves(paths: Sequence[str], args: argparse.Namespace) -> Tuple[List[Curve], str]:
    """
    Read, validate and cast curve files.

    Args:
        paths: Curve files (JSON or CSV)
        args: Parsed options carrying space and resample

    Returns:
        Tuple of (typed curves, space)

    Raises:
        ParseError: If a file cannot be read or parsed
        ValidationError: If the files disagree with each other or with --space
    """
    documents = [read_curve_file(path) for path in paths]
    space = args.space or documents[0].space
    document_space = "s2" if space == "s2-tsrv" else space
    for path, document in zip(paths, documents):
        if document.space != document_space:
            raise ValidationError(f"{path} holds a {document.space} curve, expected {document_space}")

    curves = [cast_curve(document) for document in documents]
    if getattr(args, "resample", None):
        if document_space != "rd":
            raise ValidationError("--resample applies to rd curves only")
        curves = resample_curves(curves, args.resample)
    logger.info(f"Loaded {len(curves)} {space} curves")
    return curves, space


def write_output(payload: bytes, output: Optional[str]):
    """Write a document to a file, or to stdout when no file is given."""
    if output is None:
        sys.stdout.write(payload.decode("utf-8"))
        sys.stdout.flush()
        return
    Path(output).write_bytes(payload)
    logger.info(f"Wrote {output}")
