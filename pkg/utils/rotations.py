"""
Rotation Curves Module
SRV framework for curves in SO(n): matrix exponential and logarithm
kernels, the Q-map and its inverse, the product distance, geodesics and the
reparametrization quotient.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import linalg

from utils.curves import Reparametrization, SrvFunction, apply_reparam_srv, check_same_grid
from utils.errors import LogUndefined, ValidationError
from utils.reparam import optimize_warp, warp_energy
from utils.shapes import ShapeMatchOptions

logger = logging.getLogger(__name__)

ORTHOGONALITY_TOL = 1e-8
PROJECTION_TOL = 1e-6
ANTISYMMETRY_TOL = 1e-10
CUT_LOCUS_TOL = 1e-6
SMALL_ANGLE = 1e-8


def orthogonality_defect(matrix: np.ndarray) -> float:
    """Frobenius norm of R^T R - I."""
    return float(np.linalg.norm(matrix.T @ matrix - np.eye(matrix.shape[0])))


def nearest_rotation(matrix: np.ndarray) -> np.ndarray:
    """Orthogonal factor of the polar decomposition."""
    unitary, _ = linalg.polar(matrix)
    return unitary


def _frozen_stack(values, name: str) -> np.ndarray:
    array = np.array(values, dtype=float)
    if array.ndim != 3 or array.shape[1] != array.shape[2]:
        raise ValidationError(f"{name} must be a stack of square matrices")
    if not np.all(np.isfinite(array)):
        raise ValidationError(f"{name} contains non-finite values")
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class RotationCurve:
    """Curve in SO(n) sampled at N+1 points of the uniform grid."""

    samples: np.ndarray

    def __post_init__(self):
        samples = _frozen_stack(self.samples, "samples")
        if samples.shape[0] < 2:
            raise ValidationError("a rotation curve needs at least 2 samples")
        for index, sample in enumerate(samples):
            defect = orthogonality_defect(sample)
            if defect >= ORTHOGONALITY_TOL or np.linalg.det(sample) <= 0.0:
                raise ValidationError(
                    f"sample {index} is not a rotation (orthogonality defect {defect:.3g})"
                )
        object.__setattr__(self, "samples", samples)

    @property
    def n_intervals(self) -> int:
        return self.samples.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def left_multiplied(self, g: np.ndarray) -> "RotationCurve":
        return RotationCurve(np.einsum("ij,kjl->kil", g, self.samples))


@dataclass(frozen=True)
class LieSrv:
    """Start rotation c(0) and per-interval so(n)-valued SRV values."""

    start: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        start = np.array(self.start, dtype=float)
        q = _frozen_stack(self.q, "q")
        if start.shape != q.shape[1:]:
            raise ValidationError("start and q disagree in matrix size")
        asymmetry = np.linalg.norm(q + np.transpose(q, (0, 2, 1)), axis=(1, 2))
        if np.any(asymmetry >= ANTISYMMETRY_TOL):
            raise ValidationError("SRV values must be antisymmetric")
        start.flags.writeable = False
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "q", q)

    @property
    def n_intervals(self) -> int:
        return self.q.shape[0]

    @property
    def dim(self) -> int:
        return self.start.shape[0]


def antisymmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix - np.swapaxes(matrix, -1, -2))


def skew_to_vector(matrices: np.ndarray) -> np.ndarray:
    """
    Coordinates of antisymmetric matrices with Euclidean norm equal to the
    Frobenius norm: sqrt(2) * A[i, j] for i < j.
    """
    n = matrices.shape[-1]
    rows, cols = np.triu_indices(n, k=1)
    return np.sqrt(2.0) * matrices[..., rows, cols]


def vector_to_skew(vectors: np.ndarray, n: int) -> np.ndarray:
    rows, cols = np.triu_indices(n, k=1)
    matrices = np.zeros(vectors.shape[:-1] + (n, n))
    matrices[..., rows, cols] = vectors / np.sqrt(2.0)
    matrices[..., cols, rows] = -vectors / np.sqrt(2.0)
    return matrices


def so_exp(generator: np.ndarray) -> np.ndarray:
    """
    Exponential of an antisymmetric matrix.

    Closed forms for n = 2 and n = 3 (Rodrigues), Pade scaling and squaring
    otherwise.
    """
    n = generator.shape[0]
    if n == 2:
        angle = generator[1, 0]
        cos, sin = np.cos(angle), np.sin(angle)
        return np.array([[cos, -sin], [sin, cos]])
    if n == 3:
        angle = np.sqrt(generator[2, 1] ** 2 + generator[0, 2] ** 2 + generator[1, 0] ** 2)
        square = generator @ generator
        if angle < 1e-12:
            return np.eye(3) + generator + 0.5 * square
        return (
            np.eye(3)
            + (np.sin(angle) / angle) * generator
            + ((1.0 - np.cos(angle)) / angle**2) * square
        )
    return linalg.expm(generator)


def so_log(rotation: np.ndarray) -> np.ndarray:
    """
    Principal logarithm of a rotation.

    Args:
        rotation: n x n rotation; defects up to 1e-6 are polar-projected first

    Returns:
        Antisymmetric matrix A with exp(A) = rotation

    Raises:
        LogUndefined: If the rotation angle is pi in some plane
    """
    n = rotation.shape[0]
    defect = orthogonality_defect(rotation)
    if ORTHOGONALITY_TOL <= defect <= PROJECTION_TOL:
        rotation = nearest_rotation(rotation)

    if n == 2:
        angle = np.arctan2(rotation[1, 0], rotation[0, 0])
        if np.pi - abs(angle) < CUT_LOCUS_TOL:
            logger.error(f"Logarithm requested at rotation angle {angle:.12g}")
            raise LogUndefined("rotation angle is pi")
        return np.array([[0.0, -angle], [angle, 0.0]])

    if n == 3:
        cos = np.clip(0.5 * (np.trace(rotation) - 1.0), -1.0, 1.0)
        angle = np.arccos(cos)
        if np.pi - angle < CUT_LOCUS_TOL:
            logger.error(f"Logarithm requested at rotation angle {angle:.12g}")
            raise LogUndefined("rotation angle is pi")
        skew = 0.5 * (rotation - rotation.T)
        if angle < SMALL_ANGLE:
            return skew
        return (angle / np.sin(angle)) * skew

    eigenvalues = np.linalg.eigvals(rotation)
    if np.any(np.abs(eigenvalues + 1.0) < CUT_LOCUS_TOL):
        logger.error("Logarithm requested for a rotation with eigenvalue -1")
        raise LogUndefined("rotation has an eigenvalue -1")
    return antisymmetrize(np.real(linalg.logm(rotation)))


def qmap_lie(c: RotationCurve) -> LieSrv:
    """
    Left-trivialized SRV of a rotation curve.

    Args:
        c: Rotation curve

    Returns:
        LieSrv with q_k = v_k / sqrt(|v_k|), v_k = N log(R_k^T R_{k+1})

    Raises:
        LogUndefined: If consecutive samples differ by a half turn
    """
    n_intervals = c.n_intervals
    samples = c.samples
    values = np.zeros((n_intervals, c.dim, c.dim))
    for k in range(n_intervals):
        velocity = antisymmetrize(so_log(samples[k].T @ samples[k + 1])) * n_intervals
        speed = np.linalg.norm(velocity)
        if speed > 0.0:
            values[k] = velocity / np.sqrt(speed)
    return LieSrv(samples[0], values)


def qmap_lie_inverse(s: LieSrv) -> RotationCurve:
    """Integrate R_{k+1} = R_k exp(h |q_k| q_k) from the start rotation."""
    h = 1.0 / s.n_intervals
    samples = [np.array(s.start)]
    for value in s.q:
        samples.append(samples[-1] @ so_exp(h * np.linalg.norm(value) * value))
    return RotationCurve(np.stack(samples))


def lie_vectors(s: LieSrv) -> SrvFunction:
    """SRV values as Frobenius-isometric coordinate vectors (basepoint zero)."""
    vectors = skew_to_vector(s.q)
    return SrvFunction(vectors, np.zeros(vectors.shape[1]))


def start_distance(c0: RotationCurve, c1: RotationCurve) -> float:
    return float(np.linalg.norm(so_log(c0.samples[0].T @ c1.samples[0])))


def dist_lie(c0: RotationCurve, c1: RotationCurve) -> float:
    """
    Product distance sqrt(|log(c0(0)^T c1(0))|_F^2 + ||q1 - q0||^2).

    Raises:
        DimensionMismatch: If N or n differ
        LogUndefined: If the start rotations are a half turn apart
    """
    check_same_grid(c0, c1)
    s0, s1 = qmap_lie(c0), qmap_lie(c1)
    diff = s1.q - s0.q
    return float(np.sqrt(start_distance(c0, c1) ** 2 + np.sum(diff * diff) / s0.n_intervals))


def geodesic_lie(c0: RotationCurve, c1: RotationCurve, steps: int) -> List[RotationCurve]:
    """
    Geodesic of the product metric: SO(n) geodesic between the starts and a
    straight line between the SRV values.

    Args:
        c0: Start curve
        c1: End curve
        steps: Number of time steps T

    Returns:
        T+1 rotation curves, the first and last being c0 and c1

    Raises:
        LogUndefined: If the start rotations are a half turn apart
    """
    check_same_grid(c0, c1)
    if steps < 1:
        raise ValidationError("a geodesic needs at least one time step")
    s0, s1 = qmap_lie(c0), qmap_lie(c1)
    start0 = c0.samples[0]
    direction = so_log(start0.T @ c1.samples[0])

    curves = [c0]
    for t in np.linspace(0.0, 1.0, steps + 1)[1:-1]:
        slice_srv = LieSrv(start0 @ so_exp(t * direction), (1.0 - t) * s0.q + t * s1.q)
        curves.append(qmap_lie_inverse(slice_srv))
    curves.append(c1)
    return curves


def warp_rotation_curve(c: RotationCurve, gamma: Reparametrization) -> RotationCurve:
    """Rotation curve whose SRV is the warped SRV of c."""
    if gamma.is_identity():
        return c
    s = qmap_lie(c)
    warped = apply_reparam_srv(lie_vectors(s), gamma)
    return qmap_lie_inverse(LieSrv(s.start, vector_to_skew(warped.values, c.dim)))


def dist_lie_shape(
    c0: RotationCurve,
    c1: RotationCurve,
    opts: ShapeMatchOptions = ShapeMatchOptions(),
) -> Tuple[float, Reparametrization]:
    """
    Distance between rotation curves modulo warps of c1.

    Warps leave the start term unchanged, so only the SRV term is optimized.
    With opts.quotient_reparam off the result is dist_lie and the identity.

    Args:
        c0: Reference curve
        c1: Curve to warp
        opts: Uses quotient_reparam, dp, refine and the refinement settings

    Returns:
        Tuple of (distance, optimal warp of c1)
    """
    check_same_grid(c0, c1)
    v0, v1 = lie_vectors(qmap_lie(c0)), lie_vectors(qmap_lie(c1))
    gamma = Reparametrization.identity()
    energy = warp_energy(v0, v1, gamma)
    if opts.quotient_reparam:
        match = optimize_warp(v0, v1, opts.dp, opts.refine, opts.refine_iters, opts.refine_step)
        if match.energy <= energy:
            gamma, energy = match.gamma, match.energy
    distance = float(np.sqrt(start_distance(c0, c1) ** 2 + energy))
    logger.debug(f"SO({c0.dim}) shape distance {distance:.6g}")
    return distance, gamma
