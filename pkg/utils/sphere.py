"""
Sphere Curves Module
Curves on S^2 = SO(3)/SO(2): horizontal lifts to SO(3), the fiber
minimization over rotations about the base point, homogeneous geodesics,
the reparametrization quotient and the transported SRV (TSRV) to a fixed
reference point.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from utils.curves import (
    Reparametrization,
    SampledCurve,
    SrvFunction,
    check_same_grid,
)
from utils.errors import AntipodalReference, AntipodalStep, ValidationError
from utils.reparam import optimize_warp, warp_cross_covariance, warp_energy
from utils.rotations import (
    LieSrv,
    RotationCurve,
    qmap_lie,
    qmap_lie_inverse,
    so_exp,
    so_log,
)
from utils.shapes import ShapeMatchOptions

logger = logging.getLogger(__name__)

BASE_POINT = np.array([0.0, 0.0, 1.0])
UNIT_TOL = 1e-10
ANTIPODAL_TOL = 1e-6
FIBER_GRID = 720
FIBER_TOL = 1e-10


def hat(omega: np.ndarray) -> np.ndarray:
    """Antisymmetric matrix of the cross product with omega."""
    x, y, z = omega
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def fiber_rotation(theta: float) -> np.ndarray:
    """Rotation by theta about the base point."""
    cos, sin = np.cos(theta), np.sin(theta)
    return np.array([[cos, -sin, 0.0], [sin, cos, 0.0], [0.0, 0.0, 1.0]])


def _rotate_plane(vectors: np.ndarray, theta: float) -> np.ndarray:
    cos, sin = np.cos(theta), np.sin(theta)
    return vectors @ np.array([[cos, -sin], [sin, cos]]).T


@dataclass(frozen=True)
class SphereCurve:
    """Curve on the unit sphere sampled at N+1 points of the uniform grid."""

    samples: np.ndarray

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 2 or samples.shape[1] != 3 or samples.shape[0] < 2:
            raise ValidationError("a sphere curve needs at least 2 samples in R^3")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("samples contain non-finite values")
        deviation = np.abs(np.linalg.norm(samples, axis=1) - 1.0)
        if np.any(deviation >= UNIT_TOL):
            index = int(np.argmax(deviation))
            raise ValidationError(f"sample {index} is off the unit sphere by {deviation[index]:.3g}")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def n_intervals(self) -> int:
        return self.samples.shape[0] - 1

    @property
    def dim(self) -> int:
        return 3

    def rotated(self, rotation: np.ndarray) -> "SphereCurve":
        return SphereCurve(self.samples @ np.asarray(rotation).T)

    def as_sampled_curve(self) -> SampledCurve:
        return SampledCurve(self.samples)


@dataclass(frozen=True)
class HomogeneousSrv:
    """
    Start frame R(0) with R(0) p0 = c(0) and SRV values in the horizontal
    subspace, stored as coordinates sqrt(2) (w_x, w_y) of the rotation
    vector w = (w_x, w_y, 0).
    """

    start_frame: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        start = np.array(self.start_frame, dtype=float)
        q = np.array(self.q, dtype=float)
        if start.shape != (3, 3) or q.ndim != 2 or q.shape[1] != 2:
            raise ValidationError("homogeneous SRVs need a 3x3 frame and planar values")
        start.flags.writeable = False
        q.flags.writeable = False
        object.__setattr__(self, "start_frame", start)
        object.__setattr__(self, "q", q)

    @property
    def n_intervals(self) -> int:
        return self.q.shape[0]

    def matrices(self) -> np.ndarray:
        """SRV values as antisymmetric 3x3 matrices."""
        omega = np.zeros((self.n_intervals, 3))
        omega[:, :2] = self.q / np.sqrt(2.0)
        return np.stack([hat(w) for w in omega])

    def as_lie_srv(self) -> LieSrv:
        return LieSrv(self.start_frame, self.matrices())

    def fiber_shifted(self, theta: float) -> "HomogeneousSrv":
        """Right action of the fiber rotation y(theta): (R(0) y, y^-1 q y)."""
        return HomogeneousSrv(
            self.start_frame @ fiber_rotation(theta), _rotate_plane(self.q, -theta)
        )

    def planar(self) -> SrvFunction:
        return SrvFunction(self.q, np.zeros(2))


def _sphere_log(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Tangent vector at x pointing along the shortest great circle to y."""
    cos = float(np.clip(x @ y, -1.0, 1.0))
    normal = y - cos * x
    sin = float(np.linalg.norm(normal))
    angle = np.arctan2(sin, cos)
    if np.pi - angle < ANTIPODAL_TOL:
        logger.error(f"Consecutive sphere samples are antipodal (angle {angle:.12g})")
        raise AntipodalStep("consecutive samples are antipodal")
    if sin < 1e-15:
        return normal
    return (angle / sin) * normal


def canonical_frame(point: np.ndarray) -> np.ndarray:
    """Rotation taking the base point to the given point about their common normal."""
    axis = np.cross(BASE_POINT, point)
    sin = float(np.linalg.norm(axis))
    cos = float(BASE_POINT @ point)
    if sin < 1e-12:
        return np.eye(3) if cos > 0.0 else np.diag([1.0, -1.0, -1.0])
    return so_exp(hat(axis / sin * np.arctan2(sin, cos)))


def horizontal_lift(c: SphereCurve, frame0: Optional[np.ndarray] = None) -> RotationCurve:
    """
    Horizontal curve in SO(3) projecting onto c.

    On each interval the frame turns about an axis orthogonal to the base
    point in body coordinates, so that R_{k+1} p0 lands on c_{k+1}.

    Args:
        c: Sphere curve
        frame0: Start frame with frame0 p0 = c(0) (canonical frame if omitted)

    Returns:
        Rotation curve with R_k p0 = c_k

    Raises:
        AntipodalStep: If consecutive samples are antipodal
        ValidationError: If frame0 does not map p0 to c(0)
    """
    samples = c.samples
    if frame0 is None:
        frame = canonical_frame(samples[0])
    else:
        frame = np.asarray(frame0, dtype=float)
        if np.linalg.norm(frame @ BASE_POINT - samples[0]) > 1e-6:
            raise ValidationError("frame0 does not map the base point to the curve start")

    frames = [frame]
    for k in range(c.n_intervals):
        current = frames[-1]
        velocity = current.T @ _sphere_log(current @ BASE_POINT, samples[k + 1])
        omega = np.array([-velocity[1], velocity[0], 0.0])
        frames.append(current @ so_exp(hat(omega)))
    return RotationCurve(np.stack(frames))


def project_frames(frames: RotationCurve) -> SphereCurve:
    """Projection R -> R p0, renormalized onto the sphere."""
    points = frames.samples @ BASE_POINT
    return SphereCurve(points / np.linalg.norm(points, axis=1)[:, None])


def homogeneous_srv(c: SphereCurve, frame0: Optional[np.ndarray] = None) -> HomogeneousSrv:
    """SRV of the horizontal lift, restricted to its horizontal coordinates."""
    s = qmap_lie(horizontal_lift(c, frame0))
    planar = np.sqrt(2.0) * np.column_stack([-s.q[:, 1, 2], s.q[:, 0, 2]])
    return HomogeneousSrv(s.start, planar)


def _start_angle(relative: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Rotation angle of relative @ fiber_rotation(theta)."""
    cos, sin = np.cos(theta), np.sin(theta)
    first = np.multiply.outer(cos, relative[:, 0]) + np.multiply.outer(sin, relative[:, 1])
    second = np.multiply.outer(cos, relative[:, 1]) - np.multiply.outer(sin, relative[:, 0])
    third = np.broadcast_to(relative[:, 2], first.shape)
    trace = first[..., 0] + second[..., 1] + third[..., 2]
    axis = 0.5 * np.stack(
        [second[..., 2] - third[..., 1], third[..., 0] - first[..., 2], first[..., 1] - second[..., 0]],
        axis=-1,
    )
    return np.arctan2(np.linalg.norm(axis, axis=-1), 0.5 * (trace - 1.0))


def _fiber_search(
    relative: np.ndarray, alpha: float, beta: float, constant: float
) -> Tuple[float, float]:
    """
    Minimize 2 angle(A y(theta))^2 + constant - 2 (alpha cos theta + beta sin theta).

    Returns:
        Tuple of (minimum value, minimizing angle in [0, 2 pi))
    """

    def objective(theta):
        angle = _start_angle(relative, theta)
        return 2.0 * angle**2 + constant - 2.0 * (alpha * np.cos(theta) + beta * np.sin(theta))

    spacing = 2.0 * np.pi / FIBER_GRID
    grid = np.arange(FIBER_GRID) * spacing
    values = objective(grid)
    index = int(np.argmin(values))
    theta, value = float(grid[index]), float(values[index])

    try:
        result = minimize_scalar(
            lambda t: float(objective(t)),
            bracket=(theta - spacing, theta, theta + spacing),
            method="golden",
            tol=FIBER_TOL,
        )
        if result.fun < value:
            theta, value = float(result.x), float(result.fun)
    except ValueError as e:
        logger.debug(f"Golden-section refinement skipped: {e}")

    return max(value, 0.0), float(np.mod(theta, 2.0 * np.pi))


def minimize_fiber(s0: HomogeneousSrv, s1: HomogeneousSrv) -> Tuple[float, float]:
    """
    Minimize the SO(3) x L^2 energy over the fiber action on s1.

    Args:
        s0: Reference homogeneous SRV
        s1: Homogeneous SRV acted on by y(theta)

    Returns:
        Tuple of (minimal squared distance, optimal theta)
    """
    check_same_grid(s0.planar(), s1.planar())
    h = 1.0 / s0.n_intervals
    relative = s0.start_frame.T @ s1.start_frame
    alpha = h * float(np.sum(s0.q * s1.q))
    beta = h * float(np.sum(s0.q[:, 0] * s1.q[:, 1] - s0.q[:, 1] * s1.q[:, 0]))
    constant = h * float(np.sum(s0.q**2) + np.sum(s1.q**2))
    return _fiber_search(relative, alpha, beta, constant)


def dist_sphere_homogeneous(c0: SphereCurve, c1: SphereCurve) -> Tuple[float, float]:
    """
    Homogeneous-space distance between sphere curves.

    Args:
        c0: First curve
        c1: Second curve

    Returns:
        Tuple of (distance, optimal fiber angle)

    Raises:
        AntipodalStep: If a lift fails
    """
    check_same_grid(c0, c1)
    energy, theta = minimize_fiber(homogeneous_srv(c0), homogeneous_srv(c1))
    return float(np.sqrt(energy)), theta


def _interpolate_homogeneous(
    s0: HomogeneousSrv, s1: HomogeneousSrv, steps: int
) -> List[SphereCurve]:
    start0 = s0.start_frame
    direction = so_log(start0.T @ s1.start_frame)
    matrices0, matrices1 = s0.matrices(), s1.matrices()
    slices = []
    for t in np.linspace(0.0, 1.0, steps + 1)[1:-1]:
        frames = qmap_lie_inverse(
            LieSrv(start0 @ so_exp(t * direction), (1.0 - t) * matrices0 + t * matrices1)
        )
        slices.append(project_frames(frames))
    return slices


def geodesic_sphere_homogeneous(
    c0: SphereCurve, c1: SphereCurve, steps: int
) -> List[SphereCurve]:
    """
    Geodesic between sphere curves through their horizontal lifts.

    The second lift is first moved along its fiber by the optimal angle;
    start frames follow the SO(3) geodesic and SRV values a straight line.

    Args:
        c0: Start curve
        c1: End curve
        steps: Number of time steps T

    Returns:
        T+1 sphere curves, the first and last being c0 and c1

    Raises:
        LogUndefined: If the aligned start frames are a half turn apart
    """
    check_same_grid(c0, c1)
    if steps < 1:
        raise ValidationError("a geodesic needs at least one time step")
    s0, s1 = homogeneous_srv(c0), homogeneous_srv(c1)
    _, theta = minimize_fiber(s0, s1)
    return [c0, *_interpolate_homogeneous(s0, s1.fiber_shifted(theta), steps), c1]


@dataclass(frozen=True)
class SphereShapeResult:
    """Optimal fiber angle and warp of the second curve."""

    distance: float
    theta: float
    gamma: Reparametrization
    energy_trace: Tuple[float, ...] = ()


def dist_sphere_shape(
    c0: SphereCurve, c1: SphereCurve, opts: ShapeMatchOptions = ShapeMatchOptions()
) -> SphereShapeResult:
    """
    Homogeneous distance modulo warps of c1, alternating fiber search and
    dynamic programming on the horizontal SRV coordinates.

    Args:
        c0: Reference curve
        c1: Curve to align
        opts: Uses quotient_reparam, outer_iters, dp, refine and the
            refinement settings; without the warp quotient the result is the
            homogeneous distance

    Returns:
        SphereShapeResult
    """
    check_same_grid(c0, c1)
    s0, s1 = homogeneous_srv(c0), homogeneous_srv(c1)
    z0, z1 = s0.planar(), s1.planar()
    relative = s0.start_frame.T @ s1.start_frame
    constant = (np.sum(z0.values**2) + np.sum(z1.values**2)) / z0.n_intervals

    def energy_at(theta: float, gamma: Reparametrization) -> float:
        start = 2.0 * float(_start_angle(relative, theta)) ** 2
        turned = SrvFunction(_rotate_plane(z1.values, -theta), z1.basepoint)
        return start + warp_energy(z0, turned, gamma)

    gamma = Reparametrization.identity()
    fiber_energy, theta = minimize_fiber(s0, s1)
    if not opts.quotient_reparam:
        return SphereShapeResult(
            distance=float(np.sqrt(fiber_energy)),
            theta=theta,
            gamma=gamma,
            energy_trace=(fiber_energy,),
        )
    energy = energy_at(theta, gamma)
    trace = [energy]

    for round_index in range(opts.outer_iters):
        previous = energy
        turned = SrvFunction(_rotate_plane(z1.values, -theta), z1.basepoint)
        match = optimize_warp(
            z0, turned, opts.dp, opts.refine, opts.refine_iters, opts.refine_step
        )
        candidate = energy_at(theta, match.gamma)
        if candidate <= energy:
            gamma, energy = match.gamma, candidate

        covariance = warp_cross_covariance(z0, z1, gamma)
        alpha = covariance[0, 0] + covariance[1, 1]
        beta = covariance[0, 1] - covariance[1, 0]
        _, candidate_theta = _fiber_search(relative, alpha, beta, constant)
        candidate = energy_at(candidate_theta, gamma)
        if candidate <= energy:
            theta, energy = candidate_theta, candidate

        trace.append(energy)
        logger.debug(f"Sphere alternation round {round_index + 1}: energy {energy:.10g}")
        if previous - energy < 1e-8:
            break

    return SphereShapeResult(
        distance=float(np.sqrt(energy)), theta=theta, gamma=gamma, energy_trace=tuple(trace)
    )


def check_reference_point(p: np.ndarray) -> np.ndarray:
    point = np.asarray(p, dtype=float)
    if point.shape != (3,) or abs(np.linalg.norm(point) - 1.0) >= UNIT_TOL:
        raise ValidationError("the reference point must be a unit vector in R^3")
    return point


def tsrv_reference(c: SphereCurve, p: np.ndarray) -> np.ndarray:
    """
    SRV values of a sphere curve parallel-transported to T_p S^2.

    Args:
        c: Sphere curve
        p: Unit reference point

    Returns:
        N x 3 array of tangent vectors at p

    Raises:
        AntipodalReference: If a sample is antipodal to p
        AntipodalStep: If consecutive samples are antipodal
    """
    p = check_reference_point(p)
    samples = c.samples
    cos_to_reference = np.clip(samples @ p, -1.0, 1.0)
    if np.any(np.pi - np.arccos(cos_to_reference) < ANTIPODAL_TOL):
        logger.error("A sphere sample is antipodal to the TSRV reference point")
        raise AntipodalReference("a sample is antipodal to the reference point")

    n = c.n_intervals
    values = np.zeros((n, 3))
    for k in range(n):
        x = samples[k]
        velocity = n * _sphere_log(x, samples[k + 1])
        speed = np.linalg.norm(velocity)
        if speed == 0.0:
            continue
        value = velocity / np.sqrt(speed)
        values[k] = value - (p @ value) / (1.0 + x @ p) * (x + p)
    return values


def dist_tsrv(c0: SphereCurve, c1: SphereCurve, p: np.ndarray) -> float:
    """
    L2 distance between TSRVs transported to the same reference point.

    Raises:
        AntipodalReference: If a sample of either curve is antipodal to p
    """
    check_same_grid(c0, c1)
    diff = tsrv_reference(c0, p) - tsrv_reference(c1, p)
    return float(np.sqrt(np.sum(diff * diff) / c0.n_intervals))


def warp_sphere_curve(c: SphereCurve, gamma: Reparametrization) -> SphereCurve:
    """Composition c o gamma on the grid, interpolating chords and renormalizing."""
    if gamma.is_identity():
        return c
    grid = np.linspace(0.0, 1.0, c.n_intervals + 1)
    warped = gamma.evaluate(grid)
    points = np.column_stack([np.interp(warped, grid, c.samples[:, axis]) for axis in range(3)])
    points[0], points[-1] = c.samples[0], c.samples[-1]
    return SphereCurve(points / np.linalg.norm(points, axis=1)[:, None])
