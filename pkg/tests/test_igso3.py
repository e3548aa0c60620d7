import numpy as np
import pytest

from hangpose import igso3, so3


def empirical_ks(angles, table):
    angles = np.sort(angles)
    theo = np.interp(angles, table.omega, table.cdf)
    n = len(angles)
    emp_hi = np.arange(1, n + 1) / n
    emp_lo = np.arange(0, n) / n
    return max(np.max(np.abs(emp_hi - theo)), np.max(np.abs(emp_lo - theo)))


def test_density_rejects_bad_concentration():
    with pytest.raises(ValueError):
        igso3.density(0.5, 0.0)
    with pytest.raises(ValueError):
        igso3.density(0.5, -1.0)
    with pytest.raises(ValueError):
        igso3.density(0.5, 0.5, length=0)


def test_density_zero_at_origin():
    assert igso3.density(0.0, 0.5) == 0.0


def test_density_large_concentration_limit():
    omega = np.linspace(0.0, np.pi, 512)
    f = igso3.density(omega, 10.0)
    haar = (1.0 - np.cos(omega)) / np.pi
    assert np.max(np.abs(f - haar)) < 1e-6


@pytest.mark.parametrize("eps2", [0.05, 0.5, 2.0])
def test_density_normalization(eps2):
    omega = np.linspace(0.0, np.pi, 4096)
    mass = np.trapezoid(igso3.density(omega, eps2), omega)
    assert abs(mass - 1.0) < 1e-3


def test_series_truncation_converged():
    omega = np.linspace(0.0, np.pi, 512)
    for eps2 in [0.05, 0.5]:
        f1 = igso3.density(omega, eps2, length=1000)
        f2 = igso3.density(omega, eps2, length=2000)
        assert np.max(np.abs(f1 - f2)) < 1e-8


def test_build_table_rejections():
    with pytest.raises(ValueError):
        igso3.build_table(-0.1)
    with pytest.raises(ValueError):
        igso3.build_table(0.5, n_omega=100)


def test_table_cdf_monotone_and_normalized():
    table = igso3.build_table(0.5)
    assert np.all(np.diff(table.cdf) >= 0.0)
    assert table.cdf[0] == 0.0
    assert table.cdf[-1] == 1.0
    assert np.all(table.density >= 0.0)
    mass = np.trapezoid(table.density, table.omega)
    assert abs(mass - 1.0) < 1e-6


@pytest.mark.parametrize("eps2", [0.05, 0.5, 2.0])
def test_renormalization_factor_close_to_one(eps2):
    table = igso3.build_table(eps2)
    assert 0.999 < table.raw_mass < 1.001


def test_stochastic_ordering_by_concentration():
    low = igso3.build_table(0.05)
    high = igso3.build_table(2.0)
    assert low.median_angle() < high.median_angle()


def test_sampler_ks_statistic():
    table = igso3.build_table(0.5)
    rng = np.random.default_rng(2024)
    angles = igso3.sample_angles(table, rng, 100_000)
    assert empirical_ks(angles, table) < 0.01


def test_sampled_rotations_are_valid():
    table = igso3.build_table(0.3)
    rng = np.random.default_rng(5)
    for r in igso3.sample_rotations(table, rng, 200):
        assert so3.is_rotation(r, tol=1e-9)


def test_sample_mean_angle_matches_quadrature():
    table = igso3.build_table(0.5)
    rng = np.random.default_rng(17)
    rots = igso3.sample_rotations(table, rng, 20_000)
    mc = np.mean([so3.geodesic_distance(np.eye(3), r) for r in rots])
    quad = table.mean_angle()
    assert abs(mc - quad) / quad < 0.02


def test_shifted_concentration_limit():
    table = igso3.build_table(1e-6)
    rng = np.random.default_rng(9)
    mean = so3.random_rotation(np.random.default_rng(1))
    for _ in range(100):
        out = igso3.sample_shifted(mean, table, rng)
        assert so3.geodesic_distance(mean, out) < 0.01


def test_shifted_left_invariance_of_angles():
    table = igso3.build_table(0.4)
    rng = np.random.default_rng(23)
    base = np.mean(
        [
            so3.geodesic_distance(np.eye(3), igso3.sample_rotation(table, rng))
            for _ in range(10_000)
        ]
    )
    mean = so3.random_rotation(np.random.default_rng(2))
    shifted = np.mean(
        [
            so3.geodesic_distance(mean, igso3.sample_shifted(mean, table, rng))
            for _ in range(10_000)
        ]
    )
    assert abs(shifted - base) / base < 0.02


def test_shifted_identity_reduces_to_plain_sampling():
    table = igso3.build_table(0.4)
    a = igso3.sample_rotation(table, np.random.default_rng(77))
    b = igso3.sample_shifted(np.eye(3), table, np.random.default_rng(77))
    assert np.max(np.abs(a - b)) < 1e-15


def test_tangent_fallback_normalizes():
    for eps2 in [1e-6, 5e-5]:
        table = igso3.build_table(eps2)
        assert abs(np.trapezoid(table.density, table.omega) - 1.0) < 1e-3
        assert table.cdf[-1] == 1.0


def test_table_cache_reuses_tables():
    cache = igso3.TableCache()
    t1 = cache.get(0.25)
    t2 = cache.get(0.25)
    assert t1 is t2
    assert cache.get(0.5) is not t1
