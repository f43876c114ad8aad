"""
Curve Processing Module
Core curve and SRV types, arclength resampling, the SRV transform and its
inverse, the L2 distance of SRV functions and the reparametrization action.

Curves are sampled on the uniform grid t_i = i/N and treated as piecewise
linear; SRV values are constant on each interval [t_k, t_{k+1}).
"""

import logging
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np

from utils.errors import DimensionMismatch, ValidationError, ZeroLengthCurve

logger = logging.getLogger(__name__)


def _frozen(values, ndim: int, name: str) -> np.ndarray:
    """Copy values into a read-only float array of the given rank."""
    array = np.array(values, dtype=float)
    if array.ndim != ndim:
        raise ValidationError(f"{name} must have {ndim} dimensions, got {array.ndim}")
    if not np.all(np.isfinite(array)):
        raise ValidationError(f"{name} contains non-finite values")
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class SampledCurve:
    """
    Curve in R^d sampled at N+1 points of the uniform grid on [0, 1].

    For closed curves the closure gap |points[N] - points[0]| is kept as is;
    shapes.project_closed enforces closure.
    """

    points: np.ndarray
    closed: bool = False

    def __post_init__(self):
        points = _frozen(self.points, 2, "points")
        if points.shape[0] < 2:
            raise ValidationError("a sampled curve needs at least 2 points (N >= 1)")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "closed", bool(self.closed))

    @property
    def n_intervals(self) -> int:
        return self.points.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def closure_gap(self) -> float:
        return float(np.linalg.norm(self.points[-1] - self.points[0]))

    def length(self) -> float:
        """Total chord length of the polygon."""
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())

    def translated(self, offset: np.ndarray) -> "SampledCurve":
        return SampledCurve(self.points + np.asarray(offset), self.closed)

    def rotated(self, rotation: np.ndarray) -> "SampledCurve":
        return SampledCurve(self.points @ np.asarray(rotation).T, self.closed)


@dataclass(frozen=True)
class SrvFunction:
    """Piecewise-constant SRV values q_k on [t_k, t_{k+1}) plus the start point."""

    values: np.ndarray
    basepoint: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values, 2, "values")
        basepoint = _frozen(self.basepoint, 1, "basepoint")
        if values.shape[0] < 1:
            raise ValidationError("an SRV function needs at least one interval")
        if basepoint.shape[0] != values.shape[1]:
            raise DimensionMismatch(
                f"basepoint has dimension {basepoint.shape[0]}, values {values.shape[1]}"
            )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "basepoint", basepoint)

    @property
    def n_intervals(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def norm(self) -> float:
        """L2 norm sqrt(h * sum |q_k|^2)."""
        return float(np.sqrt(np.sum(self.values**2) / self.n_intervals))

    def rotated(self, rotation: np.ndarray) -> "SrvFunction":
        rotation = np.asarray(rotation)
        return SrvFunction(self.values @ rotation.T, rotation @ self.basepoint)


@dataclass(frozen=True)
class Reparametrization:
    """
    Piecewise-linear nondecreasing warp of [0, 1] given by its nodes.

    Nodes u are strictly increasing from 0 to 1, values gamma are
    nondecreasing from 0 to 1.
    """

    u: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        u = _frozen(self.u, 1, "u")
        gamma = _frozen(self.gamma, 1, "gamma")
        if u.shape != gamma.shape or u.shape[0] < 2:
            raise ValidationError("a warp needs matching node arrays with >= 2 nodes")
        if u[0] != 0.0 or u[-1] != 1.0 or gamma[0] != 0.0 or gamma[-1] != 1.0:
            raise ValidationError("a warp must fix the endpoints 0 and 1")
        if np.any(np.diff(u) <= 0):
            raise ValidationError("warp nodes must be strictly increasing")
        if np.any(np.diff(gamma) < 0):
            raise ValidationError("warp values must be nondecreasing")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "gamma", gamma)

    @classmethod
    def identity(cls) -> "Reparametrization":
        return cls(np.array([0.0, 1.0]), np.array([0.0, 1.0]))

    @classmethod
    def from_function(
        cls, fn: Callable[[np.ndarray], np.ndarray], n: int
    ) -> "Reparametrization":
        """
        Sample a warp function on the uniform grid with n intervals.

        Args:
            fn: Nondecreasing function with fn(0) = 0 and fn(1) = 1
            n: Number of intervals

        Returns:
            Piecewise-linear interpolant of fn
        """
        u = np.linspace(0.0, 1.0, n + 1)
        values = np.asarray(fn(u), dtype=float)
        values[0], values[-1] = 0.0, 1.0
        return cls(u, np.maximum.accumulate(np.clip(values, 0.0, 1.0)))

    @classmethod
    def from_grid_values(cls, values: np.ndarray) -> "Reparametrization":
        """Warp whose nodes are the uniform grid with the given values."""
        values = np.asarray(values, dtype=float)
        return cls(np.linspace(0.0, 1.0, values.shape[0]), values)

    def evaluate(self, u) -> np.ndarray:
        return np.interp(u, self.u, self.gamma)

    def on_grid(self, n: int) -> np.ndarray:
        """Values gamma(t_k) on the uniform grid with n intervals."""
        return self.evaluate(np.linspace(0.0, 1.0, n + 1))

    def slope_at(self, u) -> np.ndarray:
        """Slope of the segment containing u (right-continuous)."""
        index = np.clip(np.searchsorted(self.u, u, side="right") - 1, 0, len(self.u) - 2)
        return np.diff(self.gamma)[index] / np.diff(self.u)[index]

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.u, self.gamma))

    def inverse(self) -> "Reparametrization":
        """
        Piecewise-linear inverse.

        Raises:
            ValidationError: If the warp has flat segments
        """
        if np.any(np.diff(self.gamma) <= 0):
            raise ValidationError("only strictly increasing warps can be inverted")
        return Reparametrization(self.gamma, self.u)

    def nodes(self) -> np.ndarray:
        return np.column_stack([self.u, self.gamma])


@dataclass(frozen=True)
class GeodesicPath:
    """Curves c(t_j, .) at times t_j = j/T along a geodesic."""

    curves: Tuple[SampledCurve, ...]

    def __post_init__(self):
        curves = tuple(self.curves)
        if len(curves) < 2:
            raise ValidationError("a geodesic path needs at least its two endpoints")
        shapes = {curve.points.shape for curve in curves}
        if len(shapes) != 1:
            raise DimensionMismatch(f"geodesic slices disagree in shape: {shapes}")
        object.__setattr__(self, "curves", curves)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, len(self.curves))

    @property
    def steps(self) -> int:
        return len(self.curves) - 1


def uniform_grid(n: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, n + 1)


def check_same_grid(*items: Sequence) -> None:
    """
    Check that curves or SRV functions share N and d.

    Raises:
        DimensionMismatch: If any two items disagree
    """
    shapes = {(item.n_intervals, item.dim) for item in items}
    if len(shapes) > 1:
        logger.error(f"Operands disagree in (N, d): {sorted(shapes)}")
        raise DimensionMismatch(f"operands disagree in (N, d): {sorted(shapes)}")


def resample_arclength(c: SampledCurve, m: int) -> SampledCurve:
    """
    Resample a curve to m+1 points equally spaced in cumulative chord length.

    Args:
        c: Curve to resample
        m: Number of output intervals

    Returns:
        Curve with the same endpoints and closed flag

    Raises:
        ZeroLengthCurve: If all points coincide
    """
    chords = np.linalg.norm(np.diff(c.points, axis=0), axis=1)
    cumulative = np.concatenate([[0.0], np.cumsum(chords)])
    total = cumulative[-1]
    if total <= 0.0:
        logger.error("Cannot resample a curve whose points all coincide")
        raise ZeroLengthCurve("all points of the curve coincide")

    targets = np.linspace(0.0, total, m + 1)
    points = np.column_stack(
        [np.interp(targets, cumulative, c.points[:, axis]) for axis in range(c.dim)]
    )
    points[0], points[-1] = c.points[0], c.points[-1]
    return SampledCurve(points, c.closed)


def srv_transform(c: SampledCurve) -> SrvFunction:
    """
    Square-root velocity transform of a piecewise-linear curve.

    Args:
        c: Sampled curve

    Returns:
        SRV values delta_k / sqrt(|delta_k| h), zero on constant intervals,
        with the curve start as basepoint
    """
    h = 1.0 / c.n_intervals
    deltas = np.diff(c.points, axis=0)
    lengths = np.linalg.norm(deltas, axis=1)
    scale = np.zeros_like(lengths)
    moving = lengths > 0.0
    scale[moving] = 1.0 / np.sqrt(lengths[moving] * h)
    return SrvFunction(deltas * scale[:, None], c.points[0])


def srv_inverse(q: SrvFunction, closed: bool = False) -> SampledCurve:
    """
    Integrate SRV values back to a curve: c_{k+1} = c_k + h |q_k| q_k.

    Args:
        q: SRV function
        closed: Closed flag of the returned curve

    Returns:
        Sampled curve starting at q.basepoint
    """
    h = 1.0 / q.n_intervals
    steps = h * np.linalg.norm(q.values, axis=1)[:, None] * q.values
    points = np.vstack([q.basepoint, q.basepoint + np.cumsum(steps, axis=0)])
    return SampledCurve(points, closed)


def l2_distance(q0: SrvFunction, q1: SrvFunction) -> float:
    """
    L2 distance between SRV functions; basepoints are ignored.

    Raises:
        DimensionMismatch: If N or d differ
    """
    check_same_grid(q0, q1)
    diff = q0.values - q1.values
    return float(np.sqrt(np.sum(diff * diff) / q0.n_intervals))


def lookup_intervals(x: np.ndarray, n: int) -> np.ndarray:
    """Index of the interval [t_k, t_{k+1}) containing x, clamped to [0, n-1]."""
    return np.clip(np.floor(np.asarray(x) * n).astype(int), 0, n - 1)


def apply_reparam_srv(q: SrvFunction, gamma: Reparametrization) -> SrvFunction:
    """
    Right action (q * gamma)(u) = sqrt(gamma'(u)) q(gamma(u)).

    The result is sampled on the uniform grid at interval midpoints, using
    the slope of the warp segment containing each midpoint.

    Args:
        q: SRV function
        gamma: Warp

    Returns:
        Warped SRV function with the same basepoint
    """
    if gamma.is_identity():
        return q
    n = q.n_intervals
    midpoints = (np.arange(n) + 0.5) / n
    slopes = gamma.slope_at(midpoints)
    values = np.sqrt(slopes)[:, None] * q.values[lookup_intervals(gamma.evaluate(midpoints), n)]
    return SrvFunction(values, q.basepoint)


def apply_reparam_curve(c: SampledCurve, gamma: Reparametrization) -> SampledCurve:
    """
    Composition c o gamma sampled on the uniform grid.

    Args:
        c: Curve, interpolated linearly between samples
        gamma: Warp

    Returns:
        Curve whose k-th point is c(gamma(t_k))
    """
    if gamma.is_identity():
        return c
    grid = uniform_grid(c.n_intervals)
    warped = gamma.evaluate(grid)
    points = np.column_stack(
        [np.interp(warped, grid, c.points[:, axis]) for axis in range(c.dim)]
    )
    points[0], points[-1] = c.points[0], c.points[-1]
    return SampledCurve(points, c.closed)
