"""Shared curve factories for the test suite."""

from pathlib import Path

import numpy as np
import pytest

from utils.app_state import AppState
from utils.curves import SampledCurve
from utils.rotations import RotationCurve, so_exp, vector_to_skew
from utils.sphere import SphereCurve

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(autouse=True)
def reset_app_state():
    AppState.clear()
    yield
    AppState.clear()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_curve(rng, n: int = 32, d: int = 2) -> SampledCurve:
    """Random walk with steps bounded away from zero."""
    steps = rng.normal(size=(n, d)) + 0.5
    return SampledCurve(np.vstack([np.zeros(d), np.cumsum(steps, axis=0) / n]))


def analytic_curve(fn, n: int, closed: bool = False) -> SampledCurve:
    t = np.linspace(0.0, 1.0, n + 1)
    return SampledCurve(np.column_stack(fn(t)), closed)


def closed_loop(n: int, a: float = 1.0, b: float = 1.0, bump: float = 0.0) -> SampledCurve:
    """Ellipse with semi-axes a, b and an optional radial bump, exactly closed."""
    t = np.linspace(0.0, 1.0, n + 1)[:-1]
    radius = 1.0 + bump * np.cos(6.0 * np.pi * t)
    loop = np.column_stack([a * radius * np.cos(2.0 * np.pi * t), b * radius * np.sin(2.0 * np.pi * t)])
    return SampledCurve(np.vstack([loop, loop[:1]]), closed=True)


def random_rotation(rng, n: int = 3) -> np.ndarray:
    vector = rng.normal(size=n * (n - 1) // 2)
    return so_exp(vector_to_skew(vector / np.linalg.norm(vector), n))


def random_rotation_curve(rng, n_intervals: int = 16, n: int = 3) -> RotationCurve:
    samples = [random_rotation(rng, n)]
    for _ in range(n_intervals):
        step = vector_to_skew(0.3 * rng.normal(size=n * (n - 1) // 2), n)
        samples.append(samples[-1] @ so_exp(step))
    return RotationCurve(np.stack(samples))


def random_sphere_curve(rng, n: int = 32) -> SphereCurve:
    """Smooth curve in the upper hemisphere."""
    t = np.linspace(0.0, 1.0, n + 1)
    phase, speed, wobble = rng.uniform(0.0, 2.0 * np.pi), rng.uniform(1.0, 2.5), rng.uniform(0.1, 0.4)
    points = np.column_stack(
        [
            np.cos(speed * t + phase),
            np.sin(speed * t + phase),
            0.8 + wobble * np.sin(3.0 * t),
        ]
    )
    return SphereCurve(points / np.linalg.norm(points, axis=1)[:, None])
