"""
Reparametrization Module
Optimization over warps of [0, 1]: dynamic programming on the lattice of
grid vertex pairs, the exact SRV energy of a piecewise-linear warp and a
projected-gradient refinement of the warp's node values.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from utils.curves import (
    Reparametrization,
    SrvFunction,
    check_same_grid,
    lookup_intervals,
)
from utils.errors import InvalidSegment, NoPath, ValidationError

logger = logging.getLogger(__name__)

# Gradient refinement stopping rules
REFINE_MAX_ITER = 100
REFINE_REL_TOL = 1e-10
ARMIJO_SLOPE = 1e-4
MAX_HALVINGS = 30
NULL_STEP = 1e-14
FLAT_PIECE = 1e-15


@dataclass(frozen=True)
class DpConfig:
    """
    Dynamic programming settings.

    Args:
        neighborhood_width: Side W of the predecessor square
        strip_halfwidth: Optional bound on |i - j| for admissible vertices
        allow_flat: Admit segments along which the warp is constant
    """

    neighborhood_width: int = 3
    strip_halfwidth: Optional[int] = None
    allow_flat: bool = True

    def __post_init__(self):
        if self.neighborhood_width < 1:
            raise ValidationError("neighborhood_width must be at least 1")
        if self.strip_halfwidth is not None and self.strip_halfwidth < 0:
            raise ValidationError("strip_halfwidth must be nonnegative")


@dataclass(frozen=True)
class MatchResult:
    """Optimized warp with its energy and optimizer diagnostics."""

    gamma: Reparametrization
    energy: float
    iterations: int = 0
    accepted_steps: int = 0
    energy_trace: Tuple[float, ...] = field(default_factory=tuple)

    @property
    def distance(self) -> float:
        return float(np.sqrt(self.energy))


def _segment_energies(
    block: np.ndarray, target: np.ndarray, starts: np.ndarray, a: int, b: int
) -> np.ndarray:
    """
    Lattice energies of segments (k, l) -> (k + a, l + b) for many l.

    Args:
        block: Rows q0[k:k+a]
        target: All values of q1
        starts: Start columns l
        a: Row extent (>= 1)
        b: Column extent (>= 0)

    Returns:
        One energy per start column
    """
    n = target.shape[0]
    offsets = (b * np.arange(a)) // a
    index = np.minimum(starts[:, None] + offsets[None, :], n - 1)
    diff = block[None, :, :] - np.sqrt(b / a) * target[index]
    return np.sum(diff * diff, axis=(1, 2)) / n


def dp_segment_energy(
    q0: SrvFunction,
    q1: SrvFunction,
    start: Tuple[int, int],
    end: Tuple[int, int],
) -> float:
    """
    Energy of the straight lattice segment from vertex (k, l) to vertex (i, j).

    Args:
        q0: Reference SRV function
        q1: SRV function being warped
        start: Vertex (k, l)
        end: Vertex (i, j)

    Returns:
        (1/N) * sum over m in [k, i) of |q0_m - sqrt(s) q1(gamma_lin(t_m))|^2

    Raises:
        InvalidSegment: If the segment is not monotone or leaves the lattice
    """
    check_same_grid(q0, q1)
    n = q0.n_intervals
    k, l = start
    i, j = end
    if not (0 <= k < i <= n and 0 <= l <= j <= n):
        logger.error(f"Invalid lattice segment {start} -> {end} on a grid of {n}")
        raise InvalidSegment(f"segment {start} -> {end} is not monotone on the lattice")
    block = q0.values[k:i]
    return float(_segment_energies(block, q1.values, np.array([l]), i - k, j - l)[0])


def dp_match(q0: SrvFunction, q1: SrvFunction, cfg: DpConfig = DpConfig()) -> MatchResult:
    """
    Find the lattice warp of q1 minimizing the discrete energy against q0.

    Rows are processed in order; within a row the energies of all columns are
    computed at once. Predecessors are scanned with k ascending, then l
    ascending, and replaced only on strict improvement, so ties resolve to
    the lexicographically smallest predecessor.

    Args:
        q0: Reference SRV function
        q1: SRV function being warped
        cfg: Neighborhood, strip and flat-segment settings

    Returns:
        MatchResult with the backtracked warp and the lattice energy

    Raises:
        DimensionMismatch: If N or d differ
        NoPath: If no admissible path reaches (N, N)
    """
    check_same_grid(q0, q1)
    n = q0.n_intervals
    width = min(cfg.neighborhood_width, n)
    strip = cfg.strip_halfwidth
    lowest_slope = 0 if cfg.allow_flat else 1
    source, target = q0.values, q1.values

    energies = np.full((n + 1, n + 1), np.inf)
    energies[0, 0] = 0.0
    pred_k = np.zeros((n + 1, n + 1), dtype=int)
    pred_l = np.zeros((n + 1, n + 1), dtype=int)

    for i in range(1, n + 1):
        j_lo, j_hi = (0, n) if strip is None else (max(0, i - strip), min(n, i + strip))
        best = np.full(n + 1, np.inf)
        best_k = np.zeros(n + 1, dtype=int)
        best_l = np.zeros(n + 1, dtype=int)
        for k in range(max(0, i - width), i):
            a = i - k
            block = source[k:i]
            for b in range(width, lowest_slope - 1, -1):
                first = max(j_lo, b)
                if first > j_hi:
                    continue
                columns = np.arange(first, j_hi + 1)
                starts = columns - b
                previous = energies[k, starts]
                reachable = np.isfinite(previous)
                if not reachable.any():
                    continue
                candidate = np.full(columns.shape[0], np.inf)
                candidate[reachable] = previous[reachable] + _segment_energies(
                    block, target, starts[reachable], a, b
                )
                better = candidate < best[columns]
                best[columns[better]] = candidate[better]
                best_k[columns[better]] = k
                best_l[columns[better]] = starts[better]
        energies[i] = best
        pred_k[i] = best_k
        pred_l[i] = best_l

    if not np.isfinite(energies[n, n]):
        logger.error(f"No admissible lattice path with strip half-width {strip}")
        raise NoPath(f"strip half-width {strip} disconnects (0, 0) from ({n}, {n})")

    vertices = [(n, n)]
    i, j = n, n
    while (i, j) != (0, 0):
        i, j = int(pred_k[i, j]), int(pred_l[i, j])
        vertices.append((i, j))
    vertices.reverse()
    path = np.array(vertices, dtype=float) / n

    energy = float(energies[n, n])
    logger.debug(f"DP match on N={n}, W={width}: energy {energy:.6g}, {len(vertices)} nodes")
    return MatchResult(
        gamma=Reparametrization(path[:, 0], path[:, 1]),
        energy=energy,
        energy_trace=(energy,),
    )


def path_energy(q0: SrvFunction, q1: SrvFunction, gamma: Reparametrization) -> float:
    """Sum of lattice segment energies along a warp whose nodes are lattice vertices."""
    n = q0.n_intervals
    vertices = np.rint(gamma.nodes() * n).astype(int)
    return float(
        sum(
            dp_segment_energy(q0, q1, tuple(start), tuple(end))
            for start, end in zip(vertices[:-1], vertices[1:])
        )
    )


def _primitive_table(values: np.ndarray) -> np.ndarray:
    """Integral of the piecewise-constant function at the grid points."""
    n, d = values.shape
    return np.vstack([np.zeros(d), np.cumsum(values, axis=0) / n])


def _primitive(values: np.ndarray, table: np.ndarray, v: np.ndarray) -> np.ndarray:
    n = values.shape[0]
    index = lookup_intervals(v, n)
    return table[index] + (v - index / n)[:, None] * values[index]


def _values_at(values: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Piecewise-constant lookup, averaging the two sides at interior grid points."""
    n = values.shape[0]
    scaled = v * n
    nearest = np.rint(scaled)
    result = values[lookup_intervals(v, n)].copy()
    on_node = (np.abs(scaled - nearest) < 1e-9) & (nearest > 0) & (nearest < n)
    node = nearest[on_node].astype(int)
    result[on_node] = 0.5 * (values[node - 1] + values[node])
    return result


class _WarpObjective:
    """Energy ||q0 - q1 * gamma||^2 for warps sampled on the grid of q0."""

    def __init__(self, q0: SrvFunction, q1: SrvFunction):
        check_same_grid(q0, q1)
        self.n = q0.n_intervals
        self.grid = np.linspace(0.0, 1.0, self.n + 1)
        self.source = q0.values
        self.target = q1.values
        self.table = _primitive_table(self.target)

    def _refinement(self, g: np.ndarray):
        """
        Split the warp's range at its node values and the grid points.

        Returns:
            Tuple of (piece lengths in the range, source index, target index,
            slopes, flat source indices)
        """
        dg = np.diff(g)
        breaks = np.union1d(g, self.grid)
        lengths = np.diff(breaks)
        middle = 0.5 * (breaks[:-1] + breaks[1:])
        source_index = np.clip(np.searchsorted(g, middle, side="right") - 1, 0, self.n - 1)
        target_index = lookup_intervals(middle, self.n)
        slopes = self.n * dg[source_index]
        return lengths, source_index, target_index, slopes, np.flatnonzero(dg <= 0.0)

    def energy(self, g: np.ndarray) -> float:
        lengths, source_index, target_index, slopes, flat = self._refinement(g)
        diff = self.source[source_index] - np.sqrt(slopes)[:, None] * self.target[target_index]
        moving = np.sum(lengths / slopes * np.einsum("pd,pd->p", diff, diff))
        resting = np.sum(self.source[flat] ** 2) / self.n
        return float(moving + resting)

    def cross_covariance(self, g: np.ndarray) -> np.ndarray:
        lengths, source_index, target_index, slopes, _ = self._refinement(g)
        weights = lengths / np.sqrt(slopes)
        return np.einsum(
            "p,pi,pj->ij", weights, self.source[source_index], self.target[target_index]
        )

    def _pieces(self, g: np.ndarray):
        dg = np.diff(g)
        dc = _primitive(self.target, self.table, g[1:]) - _primitive(
            self.target, self.table, g[:-1]
        )
        return dg, dc

    def gradient(self, g: np.ndarray) -> np.ndarray:
        dg, dc = self._pieces(g)
        inner = np.einsum("md,md->m", self.source, dc)
        at_nodes = _values_at(self.target, g)
        ok = dg > FLAT_PIECE
        root = np.sqrt(dg[ok])
        upper = np.einsum("md,md->m", self.source[ok], at_nodes[1:][ok]) / root
        lower = np.einsum("md,md->m", self.source[ok], at_nodes[:-1][ok]) / root
        curvature = 0.5 * inner[ok] / (dg[ok] * root)

        partial = np.zeros_like(g)
        partial[1:][ok] += upper - curvature
        partial[:-1][ok] += curvature - lower
        grad = -2.0 * np.sqrt(1.0 / self.n) * partial
        grad[0] = grad[-1] = 0.0
        return grad


def _project_monotone(g: np.ndarray) -> np.ndarray:
    projected = np.maximum.accumulate(np.clip(g, 0.0, 1.0))
    projected[0], projected[-1] = 0.0, 1.0
    return projected


def warp_energy(q0: SrvFunction, q1: SrvFunction, gamma: Reparametrization) -> float:
    """
    Exact energy ||q0 - q1 * gamma||^2 of the continuous right action.

    The warp is taken as its piecewise-linear interpolant on the grid of q0,
    which is exact for warps whose nodes are grid points (identity, DP and
    refined warps).

    Args:
        q0: Reference SRV function
        q1: SRV function being warped
        gamma: Warp

    Returns:
        Nonnegative energy
    """
    objective = _WarpObjective(q0, q1)
    return objective.energy(gamma.on_grid(objective.n))


def warp_cross_covariance(
    q0: SrvFunction, q1: SrvFunction, gamma: Reparametrization
) -> np.ndarray:
    """
    Matrix M with <q0, R (q1 * gamma)> = tr(R^T M) for every rotation R.

    Args:
        q0: Reference SRV function
        q1: SRV function being warped
        gamma: Warp

    Returns:
        d x d cross-covariance
    """
    objective = _WarpObjective(q0, q1)
    return objective.cross_covariance(gamma.on_grid(objective.n))


def gradient_refine(
    q0: SrvFunction,
    q1: SrvFunction,
    gamma0: Reparametrization,
    max_iter: int = REFINE_MAX_ITER,
    step: Optional[float] = None,
) -> MatchResult:
    """
    Projected gradient descent on the node values of a grid warp.

    Each iteration takes a gradient step on the interior values, projects
    onto nondecreasing sequences with fixed endpoints and backtracks until
    the Armijo condition holds. Iteration stops on a null step, on a failed
    line search or once the relative decrease falls below 1e-10.

    Args:
        q0: Reference SRV function
        q1: SRV function being warped
        gamma0: Starting warp, typically a DP result
        max_iter: Maximum number of iterations
        step: Initial step length (default 1/N)

    Returns:
        MatchResult whose energy trace is nonincreasing; gamma0 itself is
        returned when no step was accepted
    """
    objective = _WarpObjective(q0, q1)
    step = 1.0 / objective.n if step is None else step
    g = gamma0.on_grid(objective.n)
    energy = objective.energy(g)
    trace = [energy]
    accepted = 0
    iterations = 0

    for iterations in range(1, max_iter + 1):
        grad = objective.gradient(g)
        length = step
        candidate, candidate_energy = None, energy
        for _ in range(MAX_HALVINGS):
            trial = _project_monotone(g - length * grad)
            shift = trial - g
            if np.max(np.abs(shift)) < NULL_STEP:
                break
            trial_energy = objective.energy(trial)
            if trial_energy < energy and trial_energy <= energy + ARMIJO_SLOPE * float(
                grad @ shift
            ):
                candidate, candidate_energy = trial, trial_energy
                break
            length *= 0.5
        if candidate is None:
            break

        decrease = energy - candidate_energy
        previous = energy
        g, energy = candidate, candidate_energy
        accepted += 1
        trace.append(energy)
        logger.debug(f"Refinement iteration {iterations}: energy {energy:.10g}")
        if decrease <= REFINE_REL_TOL * previous:
            break

    gamma = gamma0 if accepted == 0 else Reparametrization.from_grid_values(g)
    return MatchResult(
        gamma=gamma,
        energy=energy,
        iterations=iterations,
        accepted_steps=accepted,
        energy_trace=tuple(trace),
    )


def optimize_warp(
    q0: SrvFunction,
    q1: SrvFunction,
    cfg: DpConfig = DpConfig(),
    refine: bool = False,
    refine_iters: int = REFINE_MAX_ITER,
    refine_step: Optional[float] = None,
) -> MatchResult:
    """
    Dynamic programming followed by optional gradient refinement.

    Args:
        q0: Reference SRV function
        q1: SRV function being warped
        cfg: DP settings
        refine: Whether to run gradient_refine on the DP warp
        refine_iters: Iteration cap of the refinement
        refine_step: Initial refinement step (default 1/N)

    Returns:
        MatchResult whose energy is the exact warp_energy of its warp
    """
    coarse = dp_match(q0, q1, cfg)
    if refine:
        return gradient_refine(q0, q1, coarse.gamma, refine_iters, refine_step)
    energy = warp_energy(q0, q1, coarse.gamma)
    return MatchResult(gamma=coarse.gamma, energy=energy, energy_trace=(energy,))
