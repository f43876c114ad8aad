"""
Statistics Aggregation Module
Batch computations on collections of curves: pairwise distance matrices in
every supported geometry and the elastic mean of Euclidean curves.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import polars as pl

from utils.app_state import AppState
from utils.curves import (
    Reparametrization,
    SampledCurve,
    SrvFunction,
    apply_reparam_srv,
    check_same_grid,
    srv_inverse,
    srv_transform,
)
from utils.errors import ValidationError
from utils.rotations import dist_lie, dist_lie_shape
from utils.shapes import (
    ShapeDistanceResult,
    ShapeMatchOptions,
    dist_param,
    dist_shape,
    shift_start,
)
from utils.sphere import (
    dist_sphere_homogeneous,
    dist_sphere_shape,
    dist_tsrv,
)

logger = logging.getLogger(__name__)

MEAN_ITERS = 5


def _tsrv_distance(c0, c1, opts, reference_point):
    point = c0.samples[0] if reference_point is None else reference_point
    return dist_tsrv(c0, c1, point)


# Pairwise distance by mode: (c0, c1, opts, reference_point) -> distance
DISTANCE_MODES: Dict[str, Callable] = {
    "param": lambda c0, c1, opts, ref: dist_param(c0, c1),
    "shape": lambda c0, c1, opts, ref: dist_shape(c0, c1, opts).distance,
    "lie": lambda c0, c1, opts, ref: dist_lie(c0, c1),
    "lie-shape": lambda c0, c1, opts, ref: dist_lie_shape(c0, c1, opts)[0],
    "sphere": lambda c0, c1, opts, ref: dist_sphere_homogeneous(c0, c1)[0],
    "sphere-shape": lambda c0, c1, opts, ref: dist_sphere_shape(c0, c1, opts).distance,
    "tsrv": _tsrv_distance,
}


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric matrix of pairwise distances with zero diagonal."""

    values: np.ndarray
    mode: str
    labels: Tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValidationError("a distance matrix must be square")
        if len(self.labels) != values.shape[0]:
            raise ValidationError("one label per row is required")
        if not np.all(np.isfinite(values)) or np.any(np.diag(values) != 0.0):
            raise ValidationError("distances must be finite with a zero diagonal")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", tuple(self.labels))

    def to_frame(self) -> pl.DataFrame:
        """
        Tabular view: a "curve" column of row labels and one column per curve.

        Returns:
            DataFrame with M rows and M + 1 columns
        """
        columns = {"curve": list(self.labels)}
        for index, label in enumerate(self.labels):
            columns[label] = self.values[:, index]
        return pl.DataFrame(columns)


def distance_matrix(
    curves: Sequence,
    mode: str = "param",
    opts: ShapeMatchOptions = ShapeMatchOptions(),
    labels: Optional[Sequence[str]] = None,
    reference_point: Optional[np.ndarray] = None,
) -> DistanceMatrix:
    """
    Pairwise distances between curves.

    Entries are computed for i < j and mirrored; the shape modes are only
    approximately symmetric, and the stored value is the one aligning the
    later curve onto the earlier one.

    Args:
        curves: Curves of the type the mode expects, on a common grid
        mode: One of DISTANCE_MODES
        opts: Shape matching settings for the quotient modes
        labels: Row labels (default "0", "1", ...)
        reference_point: TSRV reference point (default: start of the first curve)

    Returns:
        DistanceMatrix

    Raises:
        ValidationError: If the mode is unknown
    """
    if mode not in DISTANCE_MODES:
        logger.error(f"Unknown distance mode {mode!r}")
        raise ValidationError(f"unknown distance mode {mode!r}, expected one of {sorted(DISTANCE_MODES)}")
    distance = DISTANCE_MODES[mode]
    count = len(curves)
    if count > 1:
        check_same_grid(*curves)
    if mode == "tsrv" and reference_point is None and count > 0:
        reference_point = curves[0].samples[0]

    pairs = [(i, j) for i in range(count) for j in range(i + 1, count)]
    results = AppState.parallel_map(
        lambda pair: distance(curves[pair[0]], curves[pair[1]], opts, reference_point), pairs
    )
    values = np.zeros((count, count))
    for (i, j), value in zip(pairs, results):
        values[i, j] = values[j, i] = value

    logger.info(f"Computed {len(pairs)} {mode} distances between {count} curves")
    labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(count))
    return DistanceMatrix(values, mode, labels)


@dataclass(frozen=True)
class MeanResult:
    """Elastic mean with the objective per iteration and the final alignments."""

    template: SampledCurve
    objective_trace: Tuple[float, ...]
    alignments: Tuple[ShapeDistanceResult, ...]


def _squared_distance(q0: SrvFunction, q1: SrvFunction) -> float:
    diff = q0.values - q1.values
    return float(np.sum(diff * diff) / q0.n_intervals)


def _aligned_srv(c: SampledCurve, result: ShapeDistanceResult) -> SrvFunction:
    q = srv_transform(shift_start(c, result.seed_shift)).rotated(result.rotation)
    return apply_reparam_srv(q, result.gamma)


def srv_mean_details(
    curves: Sequence[SampledCurve],
    iters: int = MEAN_ITERS,
    opts: ShapeMatchOptions = ShapeMatchOptions(),
) -> MeanResult:
    """
    Elastic mean by alternating alignment onto the template and averaging.

    Each curve's new alignment is kept only when it brings the curve closer
    to the current template, so the objective sum ||q_i - mu||^2 never
    increases.

    Args:
        curves: Curves on a common grid, all open or all closed
        iters: Number of align-and-average iterations
        opts: Shape matching settings used for the alignments

    Returns:
        MeanResult whose template starts at the mean start point

    Raises:
        ValidationError: If no curves are given
    """
    if not curves:
        raise ValidationError("the mean of an empty collection is undefined")
    check_same_grid(*curves)
    closed = curves[0].closed
    identity = ShapeDistanceResult(
        distance=0.0,
        rotation=np.eye(curves[0].dim),
        gamma=Reparametrization.identity(),
    )
    if len(curves) == 1:
        return MeanResult(curves[0], (0.0,), (identity,))

    basepoint = np.mean([c.points[0] for c in curves], axis=0)
    mean = srv_transform(curves[0])
    aligned: List[SrvFunction] = [srv_transform(c) for c in curves]
    alignments: List[ShapeDistanceResult] = [identity] * len(curves)
    trace = [sum(_squared_distance(q, mean) for q in aligned)]

    for iteration in range(1, iters + 1):
        template = srv_inverse(SrvFunction(mean.values, basepoint), closed)
        results = AppState.parallel_map(lambda c: dist_shape(template, c, opts), list(curves))
        for index, (curve, result) in enumerate(zip(curves, results)):
            candidate = _aligned_srv(curve, result)
            if _squared_distance(candidate, mean) <= _squared_distance(aligned[index], mean):
                aligned[index], alignments[index] = candidate, result
        mean = SrvFunction(np.mean([q.values for q in aligned], axis=0), basepoint)
        trace.append(sum(_squared_distance(q, mean) for q in aligned))
        logger.debug(f"Mean iteration {iteration}: objective {trace[-1]:.10g}")

    template = srv_inverse(SrvFunction(mean.values, basepoint), closed)
    return MeanResult(template, tuple(trace), tuple(alignments))


def srv_mean(
    curves: Sequence[SampledCurve],
    iters: int = MEAN_ITERS,
    opts: ShapeMatchOptions = ShapeMatchOptions(),
) -> SampledCurve:
    """Elastic mean template of a collection of curves (see srv_mean_details)."""
    return srv_mean_details(curves, iters, opts).template
