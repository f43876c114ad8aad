import numpy as np
import pytest

from conftest import random_rotation, random_sphere_curve
from utils.curves import Reparametrization
from utils.errors import AntipodalReference, AntipodalStep, ValidationError
from utils.rotations import qmap_lie, qmap_lie_inverse, so_exp, so_log
from utils.shapes import ShapeMatchOptions, dist_param
from utils.sphere import (
    BASE_POINT,
    SphereCurve,
    canonical_frame,
    dist_sphere_homogeneous,
    dist_sphere_shape,
    dist_tsrv,
    geodesic_sphere_homogeneous,
    hat,
    homogeneous_srv,
    horizontal_lift,
    minimize_fiber,
    project_frames,
    tsrv_reference,
    warp_sphere_curve,
)


def dense_fiber_minimum(s0, s1, points: int = 100_000) -> float:
    """Fiber energy minimized over a dense grid of angles."""
    h = 1.0 / s0.n_intervals
    relative = s0.start_frame.T @ s1.start_frame
    theta = np.linspace(0.0, 2.0 * np.pi, points, endpoint=False)
    cos, sin = np.cos(theta), np.sin(theta)
    trace = cos * (relative[0, 0] + relative[1, 1]) + sin * (relative[0, 1] - relative[1, 0]) + relative[2, 2]
    angle = np.arccos(np.clip(0.5 * (trace - 1.0), -1.0, 1.0))
    z0, z1 = s0.q, s1.q
    alpha = h * np.sum(z0 * z1)
    beta = h * np.sum(z0[:, 0] * z1[:, 1] - z0[:, 1] * z1[:, 0])
    constant = h * (np.sum(z0**2) + np.sum(z1**2))
    return float(np.min(2.0 * angle**2 + constant - 2.0 * (alpha * cos + beta * sin)))


def test_hat_is_the_cross_product(rng):
    omega, x = rng.normal(size=3), rng.normal(size=3)
    assert np.allclose(hat(omega) @ x, np.cross(omega, x))


def test_canonical_frame_maps_base_point(rng):
    for _ in range(5):
        point = rng.normal(size=3)
        point /= np.linalg.norm(point)
        assert np.allclose(canonical_frame(point) @ BASE_POINT, point)
    assert np.allclose(canonical_frame(-BASE_POINT) @ BASE_POINT, -BASE_POINT)


def test_sphere_curve_validation():
    with pytest.raises(ValidationError):
        SphereCurve([[0.0, 0.0, 1.0], [0.0, 0.0, 1.5]])


def test_lift_projects_back_onto_the_curve(rng):
    c = random_sphere_curve(rng, n=64)
    assert np.allclose(project_frames(horizontal_lift(c)).samples, c.samples, atol=1e-10)


def test_lift_is_horizontal(rng):
    s = qmap_lie(horizontal_lift(random_sphere_curve(rng)))
    assert np.allclose(s.q[:, 0, 1], 0.0, atol=1e-10)


@pytest.mark.parametrize("n", [256, 1024])
def test_homogeneous_srv_roundtrip(rng, n):
    c = random_sphere_curve(rng, n=n)
    frames = qmap_lie_inverse(homogeneous_srv(c).as_lie_srv())
    assert np.allclose(project_frames(frames).samples, c.samples, atol=1e-9)


def test_lift_rejects_antipodal_steps():
    c = SphereCurve([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    with pytest.raises(AntipodalStep):
        horizontal_lift(c)


def test_distance_to_itself_vanishes(rng):
    c = random_sphere_curve(rng)
    distance, _ = dist_sphere_homogeneous(c, c)
    assert distance == 0.0


def test_distance_is_invariant_under_rotations(rng):
    for _ in range(5):
        c0, c1 = random_sphere_curve(rng), random_sphere_curve(rng)
        g = random_rotation(rng)
        expected, _ = dist_sphere_homogeneous(c0, c1)
        moved, _ = dist_sphere_homogeneous(c0.rotated(g), c1.rotated(g))
        assert moved == pytest.approx(expected, rel=1e-8, abs=1e-8)


def test_fiber_search_matches_dense_grid(rng):
    for _ in range(20):
        s0 = homogeneous_srv(random_sphere_curve(rng))
        s1 = homogeneous_srv(random_sphere_curve(rng))
        energy, _ = minimize_fiber(s0, s1)
        oracle = dense_fiber_minimum(s0, s1)
        assert energy <= oracle + 1e-9
        assert oracle - energy < 1e-6


def test_fiber_energy_is_the_lie_distance(rng):
    s0 = homogeneous_srv(random_sphere_curve(rng))
    s1 = homogeneous_srv(random_sphere_curve(rng))
    energy, theta = minimize_fiber(s0, s1)
    shifted = s1.fiber_shifted(theta)
    start = np.linalg.norm(so_log(s0.start_frame.T @ shifted.start_frame)) ** 2
    values = np.sum((s0.matrices() - shifted.matrices()) ** 2) / s0.n_intervals
    assert energy == pytest.approx(start + values, rel=1e-8)


def test_geodesic_stays_on_the_sphere(rng):
    c0, c1 = random_sphere_curve(rng), random_sphere_curve(rng)
    path = geodesic_sphere_homogeneous(c0, c1, 6)
    assert len(path) == 7
    assert path[0] is c0 and path[-1] is c1
    for curve in path:
        assert np.allclose(np.linalg.norm(curve.samples, axis=1), 1.0, atol=1e-9)


def test_geodesic_needs_a_step(rng):
    c = random_sphere_curve(rng)
    with pytest.raises(ValidationError):
        geodesic_sphere_homogeneous(c, c, 0)


def test_shape_distance_is_bounded_by_homogeneous_distance(rng):
    for _ in range(3):
        c0, c1 = random_sphere_curve(rng, n=24), random_sphere_curve(rng, n=24)
        result = dist_sphere_shape(c0, c1, ShapeMatchOptions(outer_iters=3))
        expected, _ = dist_sphere_homogeneous(c0, c1)
        assert result.distance <= expected + 1e-8
        assert np.all(np.diff(result.energy_trace) <= 0.0)
        assert 0.0 <= result.theta <= 2.0 * np.pi


def test_tsrv_values_are_transported_to_the_reference(rng):
    c = random_sphere_curve(rng)
    p = c.samples[0]
    values = tsrv_reference(c, p)
    assert np.allclose(values @ p, 0.0, atol=1e-12)
    assert values.shape == (c.n_intervals, 3)


def test_transport_preserves_lengths(rng):
    c = random_sphere_curve(rng)
    at_start = tsrv_reference(c, c.samples[0])
    elsewhere = tsrv_reference(c, np.array([0.0, 0.6, 0.8]))
    assert np.allclose(np.linalg.norm(at_start, axis=1), np.linalg.norm(elsewhere, axis=1))


def test_tsrv_distance(rng):
    c0, c1 = random_sphere_curve(rng), random_sphere_curve(rng)
    p = BASE_POINT
    assert dist_tsrv(c0, c0, p) == 0.0
    assert dist_tsrv(c0, c1, p) == pytest.approx(dist_tsrv(c1, c0, p))


def test_tsrv_rejects_antipodal_reference(rng):
    c = random_sphere_curve(rng)
    with pytest.raises(AntipodalReference):
        tsrv_reference(c, -c.samples[0])


def test_tsrv_rejects_non_unit_reference(rng):
    c = random_sphere_curve(rng)
    with pytest.raises(ValidationError):
        dist_tsrv(c, c, np.array([0.0, 0.0, 2.0]))


def test_warped_sphere_curve_stays_on_the_sphere(rng):
    c = random_sphere_curve(rng, n=16)
    warped = warp_sphere_curve(c, Reparametrization.from_function(lambda t: t**2, 16))
    assert np.allclose(np.linalg.norm(warped.samples, axis=1), 1.0)
    assert np.allclose(warped.samples[0], c.samples[0])
    assert warp_sphere_curve(c, Reparametrization.identity()) is c


def sphere_curve(fn, n: int) -> SphereCurve:
    t = np.linspace(0.0, 1.0, n + 1)
    points = np.column_stack(fn(t))
    return SphereCurve(points / np.linalg.norm(points, axis=1)[:, None])


def about_x(angle: float) -> np.ndarray:
    cos, sin = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, cos, -sin], [0.0, sin, cos]])


def about_z(angle: float) -> np.ndarray:
    cos, sin = np.cos(angle), np.sin(angle)
    return np.array([[cos, -sin, 0.0], [sin, cos, 0.0], [0.0, 0.0, 1.0]])


KINK = Reparametrization(np.array([0.0, 0.5, 1.0]), np.array([0.0, 0.125, 1.0]))


def test_lift_of_great_circle_is_a_one_parameter_subgroup():
    c = sphere_curve(lambda t: (np.sin(0.5 * np.pi * t), 0.0 * t, np.cos(0.5 * np.pi * t)), 16)
    frames = horizontal_lift(c).samples
    for k, t in enumerate(np.linspace(0.0, 1.0, 17)):
        assert np.allclose(frames[k], so_exp(hat(np.array([0.0, 0.5 * np.pi * t, 0.0]))), atol=1e-10)


def test_fiber_minimum_ignores_fiber_shift_of_either_curve(rng):
    for _ in range(5):
        s0 = homogeneous_srv(random_sphere_curve(rng))
        s1 = homogeneous_srv(random_sphere_curve(rng))
        energy, _ = minimize_fiber(s0, s1)
        shift = rng.uniform(0.0, 2.0 * np.pi)
        assert minimize_fiber(s0, s1.fiber_shifted(shift))[0] == pytest.approx(energy, abs=1e-10)
        assert minimize_fiber(s0.fiber_shifted(shift), s1)[0] == pytest.approx(energy, abs=1e-10)


def test_shape_distance_without_warps_is_homogeneous_distance(rng):
    c0, c1 = random_sphere_curve(rng), random_sphere_curve(rng)
    result = dist_sphere_shape(c0, c1, ShapeMatchOptions(quotient_reparam=False))
    distance, theta = dist_sphere_homogeneous(c0, c1)
    assert result.distance == distance
    assert result.theta == theta
    assert result.gamma.is_identity()


def test_homogeneous_distance_can_undercut_ambient_srv_distance():
    c = sphere_curve(lambda t: (0.8 * np.cos(6.0 * np.pi * t), 0.8 * np.sin(6.0 * np.pi * t), 0.6 + 0.0 * t), 64)
    turned = c.rotated(about_z(0.3))
    homogeneous, _ = dist_sphere_homogeneous(c, turned)
    ambient = dist_param(c.as_sampled_curve(), turned.as_sampled_curve())
    assert homogeneous <= np.sqrt(2.0) * 0.3 + 1e-8
    assert homogeneous < 0.5 * ambient


def test_tsrv_of_great_circle_is_along_its_tangent():
    c = sphere_curve(lambda t: (np.sin(2.0 * t), 0.0 * t, np.cos(2.0 * t)), 32)
    values = tsrv_reference(c, BASE_POINT)
    expected = np.tile([np.sqrt(2.0), 0.0, 0.0], (32, 1))
    assert np.allclose(values, expected, atol=1e-10)


def test_tsrv_distance_depends_on_global_rotation(rng):
    c0, c1 = random_sphere_curve(rng), random_sphere_curve(rng)
    g = about_x(1.0)
    plain = dist_tsrv(c0, c1, BASE_POINT)
    moved = dist_tsrv(c0.rotated(g), c1.rotated(g), BASE_POINT)
    assert abs(moved - plain) > 1e-3 * plain


def test_tsrv_distance_ignores_simultaneous_warp():
    def spiral(t):
        return np.cos(1.5 * t), np.sin(1.5 * t), 0.8 + 0.2 * np.sin(3.0 * t)

    def drift(t):
        return np.cos(2.0 * t + 0.3), np.sin(2.0 * t + 0.3), 0.9 - 0.3 * t**2

    before = dist_tsrv(sphere_curve(spiral, 4096), sphere_curve(drift, 4096), BASE_POINT)
    after = dist_tsrv(
        sphere_curve(lambda t: spiral(KINK.evaluate(t)), 4096),
        sphere_curve(lambda t: drift(KINK.evaluate(t)), 4096),
        BASE_POINT,
    )
    assert before > 0.1
    assert abs(after - before) < 1e-3
