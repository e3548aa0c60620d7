import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hangpose import so3


def random_rotation_bounded(rng, max_angle=np.pi - 0.1):
    return so3.exp_rotation(rng.uniform(0.0, max_angle) * so3.sample_uniform_axis(rng))


def test_exp_identity():
    assert np.allclose(so3.exp_rotation([0.0, 0.0, 0.0]), np.eye(3))


def test_exp_quarter_turn_z():
    expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    assert np.max(np.abs(so3.exp_rotation([0, 0, np.pi / 2]) - expected)) < 1e-12


def test_log_identity_is_zero():
    assert np.allclose(so3.log_rotation(np.eye(3)), np.zeros(3))


def test_log_quarter_turn_z():
    r = so3.exp_rotation([0, 0, np.pi / 2])
    assert np.max(np.abs(so3.log_rotation(r) - [0, 0, np.pi / 2])) < 1e-12


def test_exp_log_roundtrip_1000_random():
    rng = np.random.default_rng(12345)
    for _ in range(1000):
        r = random_rotation_bounded(rng)
        assert np.max(np.abs(so3.exp_rotation(so3.log_rotation(r)) - r)) <= 1e-9


def test_log_exp_roundtrip_on_vectors():
    rng = np.random.default_rng(7)
    for _ in range(500):
        v = rng.uniform(0.0, np.pi - 0.1) * so3.sample_uniform_axis(rng)
        assert np.max(np.abs(so3.log_rotation(so3.exp_rotation(v)) - v)) <= 1e-9


def test_log_near_pi_branch():
    rng = np.random.default_rng(3)
    for eps in [5e-5, 1e-6, 0.0]:
        axis = so3.sample_uniform_axis(rng)
        r = so3.exp_rotation((np.pi - eps) * axis)
        back = so3.exp_rotation(so3.log_rotation(r))
        assert np.max(np.abs(back - r)) < 1e-7


def test_geodesic_flow_endpoints():
    rng = np.random.default_rng(11)
    for _ in range(20):
        r = random_rotation_bounded(rng)
        assert np.max(np.abs(so3.geodesic_flow(1.0, r) - r)) < 1e-12
        assert np.max(np.abs(so3.geodesic_flow(0.0, r) - np.eye(3))) < 1e-12


def test_geodesic_flow_halves_angle():
    assert np.max(
        np.abs(
            so3.geodesic_flow(0.5, so3.exp_rotation([0, 0, np.pi / 2]))
            - so3.exp_rotation([0, 0, np.pi / 4])
        )
    ) < 1e-12


def test_geodesic_flow_composition():
    rng = np.random.default_rng(21)
    for _ in range(300):
        r = random_rotation_bounded(rng)
        g1, g2 = rng.uniform(0.0, 1.0, 2)
        lhs = so3.geodesic_flow(g1, so3.geodesic_flow(g2, r))
        rhs = so3.geodesic_flow(g1 * g2, r)
        assert np.max(np.abs(lhs - rhs)) <= 1e-9


def test_geodesic_flow_output_is_rotation():
    rng = np.random.default_rng(31)
    for _ in range(100):
        out = so3.geodesic_flow(rng.uniform(0, 1), random_rotation_bounded(rng))
        assert so3.is_rotation(out, tol=1e-9)


def test_geodesic_distance_basics():
    rng = np.random.default_rng(41)
    r = random_rotation_bounded(rng)
    assert so3.geodesic_distance(r, r) == pytest.approx(0.0, abs=1e-12)
    for theta in [0.3, 1.5, 3.0]:
        rz = so3.exp_rotation([0, 0, theta])
        assert so3.geodesic_distance(np.eye(3), rz) == pytest.approx(theta, abs=1e-12)


def test_geodesic_distance_symmetric():
    rng = np.random.default_rng(51)
    for _ in range(100):
        a, b = random_rotation_bounded(rng), random_rotation_bounded(rng)
        assert abs(
            so3.geodesic_distance(a, b) - so3.geodesic_distance(b, a)
        ) <= 1e-12


def test_geodesic_distance_triangle_inequality():
    rng = np.random.default_rng(61)
    for _ in range(200):
        a = random_rotation_bounded(rng)
        b = random_rotation_bounded(rng)
        c = random_rotation_bounded(rng)
        dab = so3.geodesic_distance(a, b)
        dbc = so3.geodesic_distance(b, c)
        dac = so3.geodesic_distance(a, c)
        assert dac <= dab + dbc + 1e-9


def test_uniform_axis_norm_and_mean():
    rng = np.random.default_rng(71)
    axes = so3.sample_uniform_axes(rng, 100_000)
    assert np.max(np.abs(np.linalg.norm(axes, axis=1) - 1.0)) < 1e-12
    assert np.max(np.abs(axes.mean(axis=0))) < 0.02


def test_uniform_axis_octant_counts():
    rng = np.random.default_rng(81)
    n = 100_000
    axes = so3.sample_uniform_axes(rng, n)
    signs = (axes > 0).astype(int)
    octant = signs[:, 0] * 4 + signs[:, 1] * 2 + signs[:, 2]
    counts = np.bincount(octant, minlength=8)
    expected = n / 8
    sigma = np.sqrt(n * (1 / 8) * (7 / 8))
    assert np.all(np.abs(counts - expected) < 5 * sigma)


def test_single_axis_sampler_matches_contract():
    rng = np.random.default_rng(91)
    v = so3.sample_uniform_axis(rng)
    assert v.shape == (3,)
    assert abs(np.linalg.norm(v) - 1.0) < 1e-12


@given(st.integers(min_value=0, max_value=2**31 - 1))
@settings(max_examples=50, deadline=None)
def test_exp_always_valid_rotation(seed):
    rng = np.random.default_rng(seed)
    v = rng.uniform(-np.pi, np.pi, 3)
    assert so3.is_rotation(so3.exp_rotation(v), tol=1e-9)


@given(st.floats(min_value=0.0, max_value=1.0), st.integers(0, 2**31 - 1))
@settings(max_examples=50, deadline=None)
def test_flow_angle_scales_linearly(gamma, seed):
    rng = np.random.default_rng(seed)
    r = random_rotation_bounded(rng)
    theta = np.linalg.norm(so3.log_rotation(r))
    flowed = so3.geodesic_flow(gamma, r)
    assert np.linalg.norm(so3.log_rotation(flowed)) == pytest.approx(
        gamma * theta, abs=1e-9
    )
