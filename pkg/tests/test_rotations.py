import numpy as np
import pytest

from conftest import random_rotation, random_rotation_curve
from utils.curves import Reparametrization
from utils.errors import DimensionMismatch, LogUndefined, ValidationError
from utils.shapes import ShapeMatchOptions
from utils.rotations import (
    RotationCurve,
    dist_lie,
    dist_lie_shape,
    geodesic_lie,
    orthogonality_defect,
    qmap_lie,
    qmap_lie_inverse,
    skew_to_vector,
    so_exp,
    so_log,
    vector_to_skew,
    warp_rotation_curve,
)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_log_inverts_exp(rng, n):
    for _ in range(10):
        vector = rng.normal(size=n * (n - 1) // 2)
        generator = vector_to_skew(vector / np.linalg.norm(vector) * rng.uniform(0.1, 2.0), n)
        assert np.allclose(so_log(so_exp(generator)), generator, atol=1e-10)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_exp_is_a_rotation(rng, n):
    rotation = so_exp(vector_to_skew(rng.normal(size=n * (n - 1) // 2), n))
    assert orthogonality_defect(rotation) < 1e-12
    assert np.linalg.det(rotation) == pytest.approx(1.0)


def test_small_angle_exp_and_log():
    generator = vector_to_skew(np.array([1e-13, 0.0, 0.0]), 3)
    assert np.allclose(so_exp(generator), np.eye(3) + generator, atol=1e-20)
    assert np.allclose(so_log(np.eye(3)), 0.0)


def test_log_of_half_turn_is_undefined():
    with pytest.raises(LogUndefined):
        so_log(np.array([[-1.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(LogUndefined):
        so_log(np.diag([1.0, -1.0, -1.0]))
    with pytest.raises(LogUndefined):
        so_log(np.diag([-1.0, -1.0, 1.0, 1.0]))


def test_log_projects_nearly_orthogonal_input(rng):
    rotation = random_rotation(rng)
    perturbed = rotation + 1e-7 * rng.normal(size=(3, 3))
    generator = so_log(perturbed)
    assert np.allclose(generator, -generator.T, atol=1e-12)
    assert np.allclose(so_exp(generator), rotation, atol=1e-6)


def test_skew_coordinates_preserve_frobenius_norm(rng):
    vector = rng.normal(size=6)
    matrix = vector_to_skew(vector, 4)
    assert np.linalg.norm(vector) == pytest.approx(np.linalg.norm(matrix))
    assert np.allclose(skew_to_vector(matrix), vector)


def test_rotation_curve_validation():
    with pytest.raises(ValidationError):
        RotationCurve(np.stack([np.eye(3), 1.1 * np.eye(3)]))
    with pytest.raises(ValidationError):
        RotationCurve(np.stack([np.eye(3), np.diag([1.0, 1.0, -1.0])]))
    with pytest.raises(ValidationError):
        RotationCurve(np.eye(3)[None])


@pytest.mark.parametrize("n", [2, 3, 4])
def test_qmap_roundtrip(rng, n):
    c = random_rotation_curve(rng, n_intervals=16, n=n)
    back = qmap_lie_inverse(qmap_lie(c))
    assert np.allclose(back.samples, c.samples, atol=1e-10)


def test_qmap_values_are_antisymmetric(rng):
    s = qmap_lie(random_rotation_curve(rng))
    assert np.allclose(s.q, -np.transpose(s.q, (0, 2, 1)), atol=1e-12)


def test_distance_between_constant_curves(rng):
    r0, r1 = random_rotation(rng), random_rotation(rng)
    c0 = RotationCurve(np.stack([r0] * 9))
    c1 = RotationCurve(np.stack([r1] * 9))
    expected = np.linalg.norm(so_log(r0.T @ r1))
    assert dist_lie(c0, c1) == pytest.approx(expected, abs=1e-10)


def test_distance_is_left_invariant(rng):
    for _ in range(5):
        c0, c1 = random_rotation_curve(rng), random_rotation_curve(rng)
        g = random_rotation(rng)
        moved = dist_lie(c0.left_multiplied(g), c1.left_multiplied(g))
        assert moved == pytest.approx(dist_lie(c0, c1), abs=1e-10)


def test_distance_rejects_mismatched_grids(rng):
    with pytest.raises(DimensionMismatch):
        dist_lie(random_rotation_curve(rng, n_intervals=8), random_rotation_curve(rng, n_intervals=9))


def test_geodesic_slices_stay_in_the_group(rng):
    for _ in range(20):
        c0, c1 = random_rotation_curve(rng), random_rotation_curve(rng)
        path = geodesic_lie(c0, c1, 4)
        assert len(path) == 5
        assert path[0] is c0 and path[-1] is c1
        for curve in path:
            assert max(orthogonality_defect(sample) for sample in curve.samples) < 1e-8


def test_geodesic_midpoint_halves_distance(rng):
    c0 = random_rotation_curve(rng)
    c1 = c0.left_multiplied(so_exp(vector_to_skew(np.array([0.3, -0.2, 0.1]), 3)))
    path = geodesic_lie(c0, c1, 2)
    assert dist_lie(c0, path[1]) == pytest.approx(0.5 * dist_lie(c0, c1), abs=1e-8)


def test_shape_distance_is_bounded_by_parametrized_distance(rng):
    for _ in range(3):
        c0, c1 = random_rotation_curve(rng), random_rotation_curve(rng)
        distance, gamma = dist_lie_shape(c0, c1)
        assert distance <= dist_lie(c0, c1) + 1e-10
        assert gamma.gamma[0] == 0.0 and gamma.gamma[-1] == 1.0


def test_shape_distance_of_equal_curves_vanishes(rng):
    c = random_rotation_curve(rng)
    distance, gamma = dist_lie_shape(c, c)
    assert distance < 1e-10
    assert gamma.is_identity()


def test_warped_rotation_curve_keeps_start(rng):
    c = random_rotation_curve(rng, n_intervals=16)
    warped = warp_rotation_curve(c, Reparametrization.from_function(lambda t: t**2, 16))
    assert np.allclose(warped.samples[0], c.samples[0])
    assert warped.n_intervals == 16
    assert warp_rotation_curve(c, Reparametrization.identity()) is c


def test_geodesic_slices_divide_distance_linearly(rng):
    for _ in range(20):
        c0, c1 = random_rotation_curve(rng), random_rotation_curve(rng)
        path = geodesic_lie(c0, c1, 4)
        total = dist_lie(c0, c1)
        for j, t in ((1, 0.25), (2, 0.5), (3, 0.75)):
            assert dist_lie(c0, path[j]) == pytest.approx(t * total, abs=1e-6)


def analytic_rotation_curve(fn, n: int) -> RotationCurve:
    t = np.linspace(0.0, 1.0, n + 1)
    vectors = np.column_stack(fn(t))
    return RotationCurve(np.stack([so_exp(vector_to_skew(v, 3)) for v in vectors]))


def test_distance_ignores_simultaneous_warp():
    warp = Reparametrization(np.array([0.0, 0.5, 1.0]), np.array([0.0, 0.125, 1.0]))

    def tumble(t):
        return t, 0.5 * t**2, 0.3 * np.sin(t)

    def wobble(t):
        return 0.8 * t, -0.2 * t, 0.5 * t**2 + 0.1

    before = dist_lie(analytic_rotation_curve(tumble, 1024), analytic_rotation_curve(wobble, 1024))
    after = dist_lie(
        analytic_rotation_curve(lambda t: tumble(warp.evaluate(t)), 1024),
        analytic_rotation_curve(lambda t: wobble(warp.evaluate(t)), 1024),
    )
    assert before > 0.1
    assert abs(after - before) < 1e-3


def test_shape_distance_without_warps_is_lie_distance(rng):
    c0, c1 = random_rotation_curve(rng), random_rotation_curve(rng)
    distance, gamma = dist_lie_shape(c0, c1, ShapeMatchOptions(quotient_reparam=False))
    assert gamma.is_identity()
    assert distance == pytest.approx(dist_lie(c0, c1), rel=1e-10)
