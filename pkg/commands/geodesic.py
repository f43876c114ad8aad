"""
Geodesic Command
Writes the sampled geodesic between two curves as a geodesic document.
"""

import argparse
import logging
from typing import List, Sequence

import numpy as np

from commands.options import (
    add_curve_options,
    add_match_options,
    add_output_option,
    load_curves,
    match_options,
    positive_int,
    resolve_mode,
    write_output,
)
from data.cast_types import Curve, curve_document
from data.curve_files import write_geodesic
from utils.errors import ValidationError
from utils.rotations import dist_lie_shape, geodesic_lie, warp_rotation_curve
from utils.shapes import geodesic_closed, geodesic_open, geodesic_shape
from utils.sphere import dist_sphere_shape, geodesic_sphere_homogeneous, warp_sphere_curve

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser("geodesic", help="geodesic between two curves")
    parser.add_argument("first", metavar="A")
    parser.add_argument("second", metavar="B")
    parser.add_argument("--steps", type=positive_int, default=10, metavar="T")
    add_curve_options(parser)
    add_match_options(parser)
    add_output_option(parser)
    parser.set_defaults(handler=run)


def geodesic_curves(c0: Curve, c1: Curve, mode: str, steps: int, opts) -> List[Curve]:
    """
    Geodesic slices for a distance mode.

    Args:
        c0: Start curve
        c1: End curve
        mode: Distance mode from resolve_mode
        steps: Number of time steps T
        opts: Shape matching settings

    Returns:
        T+1 curves

    Raises:
        ValidationError: If the mode has no geodesic
    """
    if mode == "param":
        if c0.closed and c1.closed:
            return list(geodesic_closed(c0, c1, steps).curves)
        return list(geodesic_open(c0, c1, steps).curves)
    if mode == "shape":
        path, _ = geodesic_shape(c0, c1, steps, opts)
        return list(path.curves)
    if mode == "lie":
        return geodesic_lie(c0, c1, steps)
    if mode == "lie-shape":
        _, gamma = dist_lie_shape(c0, c1, opts)
        return geodesic_lie(c0, warp_rotation_curve(c1, gamma), steps)
    if mode == "sphere":
        return geodesic_sphere_homogeneous(c0, c1, steps)
    if mode == "sphere-shape":
        result = dist_sphere_shape(c0, c1, opts)
        return geodesic_sphere_homogeneous(c0, warp_sphere_curve(c1, result.gamma), steps)
    raise ValidationError(f"no geodesic is available in {mode} mode")


def _times(steps: int) -> Sequence[float]:
    return np.linspace(0.0, 1.0, steps + 1).tolist()


def run(args: argparse.Namespace) -> int:
    (c0, c1), space = load_curves([args.first, args.second], args)
    mode = resolve_mode(space, args.mode)
    curves = geodesic_curves(c0, c1, mode, args.steps, match_options(args))
    logger.info(f"Computed a {mode} geodesic with {len(curves)} slices")
    payload = write_geodesic(_times(args.steps), [curve_document(c) for c in curves])
    write_output(payload, args.output)
    return 0
