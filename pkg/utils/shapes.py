"""
Shape Analysis Module
Geodesics and distances for curves in R^d: explicit open-curve geodesics,
rotation and reparametrization quotients, closure projection and the
starting-point search for closed curves.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from utils.app_state import AppState
from utils.curves import (
    GeodesicPath,
    Reparametrization,
    SampledCurve,
    SrvFunction,
    apply_reparam_curve,
    check_same_grid,
    l2_distance,
    srv_inverse,
    srv_transform,
)
from utils.errors import (
    DegenerateCovariance,
    ProjectionDiverged,
    ValidationError,
)
from utils.reparam import (
    REFINE_MAX_ITER,
    DpConfig,
    optimize_warp,
    warp_cross_covariance,
    warp_energy,
)

logger = logging.getLogger(__name__)

CLOSURE_TOL = 1e-8
PROJECTION_MAX_ITER = 100
ALTERNATION_TOL = 1e-8
RANK_TOL = 1e-12


@dataclass(frozen=True)
class ShapeMatchOptions:
    """
    Which transformations to quotient out and how hard to optimize.

    Args:
        quotient_rotation: Optimize over rotations of the second curve
        quotient_reparam: Optimize over warps of the second curve
        outer_iters: Rounds of the rotation/warp alternation
        dp: Dynamic programming settings
        refine: Polish each DP warp by gradient refinement
        seed_stride: Stride of the starting-point search for closed curves
        refine_iters: Iteration cap of the refinement
        refine_step: Initial refinement step (default 1/N)
    """

    quotient_rotation: bool = True
    quotient_reparam: bool = True
    outer_iters: int = 5
    dp: DpConfig = field(default_factory=DpConfig)
    refine: bool = False
    seed_stride: int = 1
    refine_iters: int = REFINE_MAX_ITER
    refine_step: Optional[float] = None

    def __post_init__(self):
        if self.outer_iters < 1:
            raise ValidationError("outer_iters must be at least 1")
        if self.seed_stride < 1:
            raise ValidationError("seed_stride must be at least 1")


@dataclass(frozen=True)
class ShapeDistanceResult:
    """
    Optimal alignment of the second curve onto the first.

    The aligned curve is the second curve with its start moved by seed_shift
    samples, rotated by rotation and then warped by gamma.
    """

    distance: float
    rotation: np.ndarray
    gamma: Reparametrization
    seed_shift: int = 0
    energy_trace: Tuple[float, ...] = ()


def geodesic_open(c0: SampledCurve, c1: SampledCurve, steps: int) -> GeodesicPath:
    """
    Straight line between SRV functions, mapped back to curves.

    Args:
        c0: Start curve
        c1: End curve
        steps: Number of time steps T (T+1 slices)

    Returns:
        GeodesicPath whose first and last slices are c0 and c1

    Raises:
        DimensionMismatch: If N or d differ
    """
    check_same_grid(c0, c1)
    if steps < 1:
        raise ValidationError("a geodesic needs at least one time step")
    q0, q1 = srv_transform(c0), srv_transform(c1)
    closed = c0.closed and c1.closed

    curves = [c0]
    for t in np.linspace(0.0, 1.0, steps + 1)[1:-1]:
        q = SrvFunction(
            (1.0 - t) * q0.values + t * q1.values,
            (1.0 - t) * q0.basepoint + t * q1.basepoint,
        )
        curves.append(srv_inverse(q, closed))
    curves.append(c1)
    return GeodesicPath(tuple(curves))


def dist_param(c0: SampledCurve, c1: SampledCurve) -> float:
    """
    Elastic distance between parametrized curves.

    Raises:
        DimensionMismatch: If N or d differ
    """
    return l2_distance(srv_transform(c0), srv_transform(c1))


def rotation_from_covariance(covariance: np.ndarray) -> np.ndarray:
    """
    Rotation R maximizing tr(R^T M).

    Args:
        covariance: d x d cross-covariance M

    Returns:
        Rotation with determinant +1

    Raises:
        DegenerateCovariance: If M has rank below d - 1
    """
    d = covariance.shape[0]
    u, singular, vt = linalg.svd(covariance)
    if singular[0] <= 0.0 or np.sum(singular > RANK_TOL * singular[0]) < d - 1:
        logger.error(f"Cross-covariance rank too low for a rotation: {singular}")
        raise DegenerateCovariance(f"cross-covariance singular values {singular}")
    correction = np.ones(d)
    correction[-1] = np.sign(linalg.det(u @ vt))
    return (u * correction) @ vt


def procrustes_align(c0: SampledCurve, c1: SampledCurve) -> np.ndarray:
    """
    Rotation R minimizing ||Q(c0) - R Q(c1)||.

    Args:
        c0: Reference curve
        c1: Curve to rotate

    Returns:
        d x d rotation matrix

    Raises:
        DimensionMismatch: If N or d differ
        DegenerateCovariance: If the rotation is undetermined
    """
    check_same_grid(c0, c1)
    q0, q1 = srv_transform(c0), srv_transform(c1)
    covariance = q0.values.T @ q1.values / q0.n_intervals
    return rotation_from_covariance(covariance)


def shift_start(c: SampledCurve, shift: int) -> SampledCurve:
    """Move the start of a closed curve forward by a number of samples."""
    if shift == 0:
        return c
    loop = np.roll(c.points[:-1], -shift, axis=0)
    return SampledCurve(np.vstack([loop, loop[:1]]), c.closed)


def _alignment_energy(
    q0: SrvFunction,
    q1: SrvFunction,
    rotation: np.ndarray,
    gamma: Reparametrization,
    quotient_reparam: bool,
) -> float:
    rotated = q1.rotated(rotation)
    if quotient_reparam:
        return warp_energy(q0, rotated, gamma)
    return l2_distance(q0, rotated) ** 2


def _alternate(
    q0: SrvFunction, q1: SrvFunction, opts: ShapeMatchOptions, seed_shift: int
) -> ShapeDistanceResult:
    """Alternate rotation and warp updates, keeping only non-increasing steps."""
    rotation = np.eye(q0.dim)
    gamma = Reparametrization.identity()
    energy = _alignment_energy(q0, q1, rotation, gamma, opts.quotient_reparam)
    trace = [energy]

    if opts.quotient_rotation or opts.quotient_reparam:
        for round_index in range(opts.outer_iters):
            previous = energy
            if opts.quotient_rotation:
                try:
                    covariance = warp_cross_covariance(q0, q1, gamma)
                    candidate = rotation_from_covariance(covariance)
                except DegenerateCovariance:
                    logger.warning("Degenerate cross-covariance, keeping the current rotation")
                    candidate = rotation
                candidate_energy = _alignment_energy(
                    q0, q1, candidate, gamma, opts.quotient_reparam
                )
                if candidate_energy <= energy:
                    rotation, energy = candidate, candidate_energy
            if opts.quotient_reparam:
                match = optimize_warp(
                    q0,
                    q1.rotated(rotation),
                    opts.dp,
                    opts.refine,
                    opts.refine_iters,
                    opts.refine_step,
                )
                if match.energy <= energy:
                    gamma, energy = match.gamma, match.energy
            trace.append(energy)
            logger.debug(f"Alternation round {round_index + 1}: energy {energy:.10g}")
            if previous - energy < ALTERNATION_TOL:
                break

    if opts.quotient_reparam:
        distance = float(np.sqrt(energy))
    else:
        distance = l2_distance(q0, q1.rotated(rotation))
    return ShapeDistanceResult(
        distance=distance,
        rotation=rotation,
        gamma=gamma,
        seed_shift=seed_shift,
        energy_trace=tuple(trace),
    )


def dist_shape(
    c0: SampledCurve, c1: SampledCurve, opts: ShapeMatchOptions = ShapeMatchOptions()
) -> ShapeDistanceResult:
    """
    Distance between the shapes of two curves.

    Translations are quotiented by the SRV transform; rotations and warps of
    c1 by alternating minimization. For closed curves every seed_stride-th
    starting point of c1 is tried and the best one kept, the smallest shift
    winning ties.

    Args:
        c0: Reference curve
        c1: Curve to align
        opts: Quotient and optimizer settings

    Returns:
        ShapeDistanceResult for the best starting point

    Raises:
        DimensionMismatch: If N or d differ
        ValidationError: If one curve is closed and the other open
    """
    check_same_grid(c0, c1)
    if c0.closed != c1.closed:
        logger.error("Shape distance between an open and a closed curve requested")
        raise ValidationError("both curves must be open or both closed")
    q0 = srv_transform(c0)

    if not c1.closed:
        return _alternate(q0, srv_transform(c1), opts, 0)

    shifts = list(range(0, c1.n_intervals, opts.seed_stride))
    candidates = AppState.parallel_map(
        lambda shift: _alternate(q0, srv_transform(shift_start(c1, shift)), opts, shift),
        shifts,
    )
    best = candidates[0]
    for candidate in candidates[1:]:
        if candidate.distance < best.distance:
            best = candidate
    logger.debug(f"Best seed shift {best.seed_shift} of {len(shifts)} tried")
    return best


def align_curve(c1: SampledCurve, result: ShapeDistanceResult) -> SampledCurve:
    """Apply the seed shift, rotation and warp of a shape match to c1."""
    moved = shift_start(c1, result.seed_shift).rotated(result.rotation)
    return apply_reparam_curve(moved, result.gamma)


def _closure_residual(values: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(values, axis=1)
    return (norms[:, None] * values).sum(axis=0) / values.shape[0]


def _closure_blocks(values: np.ndarray) -> np.ndarray:
    """Jacobian blocks |q| I + q q^T / |q| of q -> |q| q, zero where q = 0."""
    n, d = values.shape
    norms = np.linalg.norm(values, axis=1)
    blocks = np.zeros((n, d, d))
    moving = norms > 0.0
    blocks[moving] = norms[moving, None, None] * np.eye(d) + np.einsum(
        "ki,kj->kij", values[moving], values[moving]
    ) / norms[moving, None, None]
    return blocks


def project_closed(
    c: SampledCurve, tol: float = CLOSURE_TOL, max_iter: int = PROJECTION_MAX_ITER
) -> SampledCurve:
    """
    Project a curve onto closed curves by Gauss-Newton steps in SRV space.

    Each step is the smallest SRV correction that cancels the linearized
    closure residual G(q) = h * sum |q_k| q_k, followed by backtracking on
    |G|.

    Args:
        c: Curve to close
        tol: Target closure gap
        max_iter: Maximum number of Gauss-Newton steps

    Returns:
        Curve flagged closed with closure gap below tol; the input points
        when they are already closed

    Raises:
        ProjectionDiverged: If the tolerance is not reached
    """
    if c.closure_gap < tol:
        return SampledCurve(c.points, closed=True)

    q = srv_transform(c)
    values = np.array(q.values)
    h = 1.0 / q.n_intervals
    residual = _closure_residual(values)
    gap = float(np.linalg.norm(residual))

    for iteration in range(1, max_iter + 1):
        blocks = _closure_blocks(values)
        normal = h * h * np.einsum("kij,kjl->il", blocks, blocks)
        try:
            multiplier = linalg.solve(normal, residual, assume_a="pos")
        except (linalg.LinAlgError, ValueError) as e:
            logger.error(f"Closure projection hit a singular system: {e}")
            raise ProjectionDiverged(f"singular closure system at iteration {iteration}")
        correction = -h * np.einsum("kij,j->ki", blocks, multiplier)

        length = 1.0
        for _ in range(30):
            trial = values + length * correction
            trial_residual = _closure_residual(trial)
            trial_gap = float(np.linalg.norm(trial_residual))
            if trial_gap < gap:
                break
            length *= 0.5
        else:
            logger.error(f"Closure projection stalled at gap {gap:.3g}")
            raise ProjectionDiverged(f"line search failed at closure gap {gap:.3g}")

        values, residual, gap = trial, trial_residual, trial_gap
        logger.debug(f"Closure projection step {iteration}: gap {gap:.3g}")
        if gap < tol:
            return srv_inverse(SrvFunction(values, q.basepoint), closed=True)

    logger.error(f"Closure projection did not reach {tol:g} in {max_iter} steps")
    raise ProjectionDiverged(f"closure gap {gap:.3g} after {max_iter} steps")


def _ensure_closed(c: SampledCurve, tol: float, max_iter: int) -> SampledCurve:
    if c.closure_gap >= tol:
        logger.warning(f"Input curve has closure gap {c.closure_gap:.3g}, projecting it first")
    return project_closed(c, tol, max_iter)


def geodesic_closed(
    c0: SampledCurve,
    c1: SampledCurve,
    steps: int,
    tol: float = CLOSURE_TOL,
    max_iter: int = PROJECTION_MAX_ITER,
) -> GeodesicPath:
    """
    Geodesic between closed curves: open-curve geodesic, then projection of
    every intermediate slice onto closed curves.

    Args:
        c0: Start curve
        c1: End curve
        steps: Number of time steps T
        tol: Closure tolerance of the projection
        max_iter: Iteration cap of the projection

    Returns:
        GeodesicPath of closed curves

    Raises:
        ProjectionDiverged: If a slice cannot be closed
    """
    start = _ensure_closed(c0, tol, max_iter)
    end = _ensure_closed(c1, tol, max_iter)
    path = geodesic_open(start, end, steps)
    inner: List[SampledCurve] = AppState.parallel_map(
        lambda slice_: project_closed(slice_, tol, max_iter), list(path.curves[1:-1])
    )
    return GeodesicPath((start, *inner, end))


def geodesic_shape(
    c0: SampledCurve,
    c1: SampledCurve,
    steps: int,
    opts: ShapeMatchOptions = ShapeMatchOptions(),
) -> Tuple[GeodesicPath, ShapeDistanceResult]:
    """
    Geodesic between shapes: align c1 onto c0, then connect them.

    Args:
        c0: Start curve
        c1: End curve, aligned before the geodesic is taken
        steps: Number of time steps T
        opts: Quotient and optimizer settings

    Returns:
        Tuple of (geodesic path, alignment result)
    """
    result = dist_shape(c0, c1, opts)
    aligned = align_curve(c1, result)
    if c0.closed:
        return geodesic_closed(c0, aligned, steps), result
    return geodesic_open(c0, aligned, steps), result


def path_length(path: GeodesicPath) -> float:
    """Sum of parametrized distances between consecutive slices."""
    return float(
        sum(dist_param(a, b) for a, b in zip(path.curves[:-1], path.curves[1:]))
    )
