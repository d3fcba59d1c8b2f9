import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special, stats

from drtubes.exceptions import DegenerateShapeError, DomainError, EmptyCapError, InvalidDesignError
from drtubes.sphere import (
    AngularGaussianParam,
    build_contrast_basis,
    cap_volume_fraction,
    is_degenerate,
    log_ip,
    projected_normal_density,
    sample_projected_normal,
    sample_uniform_cap,
    sample_uniform_sphere,
    standardize,
)

from .strategies import affine_maps


def test_basis_two_observations():
    basis = build_contrast_basis(2)
    np.testing.assert_allclose(basis.rows, [[1 / np.sqrt(2), -1 / np.sqrt(2)]], atol=1e-15)


def test_basis_three_observations():
    basis = build_contrast_basis(3)
    expected = [[1 / np.sqrt(2), -1 / np.sqrt(2), 0], np.array([1, 1, -2]) / np.sqrt(6)]
    np.testing.assert_allclose(basis.rows, expected, atol=1e-15)


@pytest.mark.parametrize("n", [2, 3, 5, 17, 100, 200, 500])
def test_basis_orthonormal_contrasts(n):
    basis = build_contrast_basis(n)
    assert basis.rows.shape == (n - 1, n)
    np.testing.assert_allclose(basis.rows @ np.ones(n), 0, atol=1e-12)
    np.testing.assert_allclose(basis.rows @ basis.rows.T, np.eye(n - 1), atol=1e-12)


def test_basis_apply_matches_matrix():
    basis = build_contrast_basis(7)
    x = np.random.default_rng(1).normal(size=(4, 7))
    np.testing.assert_allclose(basis.apply(x), x @ basis.rows.T, atol=1e-13)


def test_basis_is_read_only():
    basis = build_contrast_basis(4)
    with pytest.raises(ValueError):
        basis.rows[0, 0] = 1.0


@pytest.mark.parametrize("n", [1, 0, -3])
def test_basis_needs_two_observations(n):
    with pytest.raises(InvalidDesignError):
        build_contrast_basis(n)


def test_standardize_two_observations():
    basis = build_contrast_basis(2)
    np.testing.assert_allclose(standardize([0, 1], basis), [-1.0])


def test_standardize_constant():
    with pytest.raises(DegenerateShapeError):
        standardize([1, 1, 1], build_contrast_basis(3))


def test_standardize_shift_and_scale():
    basis = build_contrast_basis(3)
    np.testing.assert_allclose(standardize([0, 1, 2], basis), standardize([5, 7, 9], basis), atol=1e-15)


@given(affine_maps())
def test_standardize_affine_invariance(ab):
    a, b = ab
    basis = build_contrast_basis(6)
    x = np.array([0.0, 0.3, 1.1, 0.2, 2.5, -0.7])
    np.testing.assert_allclose(standardize(a + b * x, basis), standardize(x, basis), atol=1e-12)
    np.testing.assert_allclose(standardize(a - b * x, basis), -standardize(x, basis), atol=1e-12)


def test_is_degenerate_mask():
    basis = build_contrast_basis(3)
    mask = is_degenerate(np.array([[1.0, 1.0, 1.0], [0.0, 1.0, 2.0]]), basis)
    assert mask.tolist() == [True, False]


@pytest.mark.parametrize("d", [1, 2, 10, 98])
def test_cap_hemisphere_and_point(d):
    assert cap_volume_fraction(0.0, d) == 0.5
    assert cap_volume_fraction(1.0, d) == 0.0
    assert cap_volume_fraction(-1.0, d) == 1.0


def test_cap_on_circle_is_arc_length():
    theta = np.random.default_rng(3).uniform(0, np.pi, 100)
    np.testing.assert_allclose(cap_volume_fraction(np.cos(theta), 1), theta / np.pi, atol=1e-12)


@pytest.mark.parametrize("d", [3, 10, 98])
@pytest.mark.parametrize("r", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
def test_cap_equals_t_test_pvalue(r, d):
    t = r * np.sqrt(d / (1 - r * r))
    assert cap_volume_fraction(r, d) == pytest.approx(stats.t.sf(t, d), abs=1e-10)


@given(st.floats(min_value=-1, max_value=1), st.integers(min_value=1, max_value=300))
def test_cap_reflection(r, d):
    assert cap_volume_fraction(r, d) + cap_volume_fraction(-r, d) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("d", [1, 3, 10, 98])
def test_cap_strictly_decreasing(d):
    r = np.linspace(-0.5, 0.5, 201)
    assert np.all(np.diff(cap_volume_fraction(r, d)) < 0)


def test_cap_domain():
    with pytest.raises(DomainError):
        cap_volume_fraction(1.01, 3)


def test_uniform_sphere_is_centered():
    v = sample_uniform_sphere(3, np.random.default_rng(4), size=100_000)
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1, atol=1e-12)
    assert np.all(np.abs(v.mean(axis=0)) < 4 / np.sqrt(100_000))


def test_uniform_sphere_cap_frequency():
    r, d, size = 0.3, 5, 100_000
    v = sample_uniform_sphere(d, np.random.default_rng(5), size=size)
    c = cap_volume_fraction(r, d)
    se = np.sqrt(c * (1 - c) / size)
    assert abs(np.mean(v[:, 0] > r) - c) < 4 * se


def test_uniform_circle_angle():
    v = sample_uniform_sphere(1, np.random.default_rng(6), size=10_000)
    angle = np.arctan2(v[:, 1], v[:, 0])
    assert stats.kstest(angle, stats.uniform(loc=-np.pi, scale=2 * np.pi).cdf).pvalue > 0.001


def _random_unit(dim, seed):
    w = np.random.default_rng(seed).normal(size=dim)
    return w / np.linalg.norm(w)


@pytest.mark.parametrize("d", [2, 10, 98])
def test_cap_sample_support(d):
    w = _random_unit(d + 1, d)
    v = sample_uniform_cap(np.tile(w, (5000, 1)), 0.4, np.random.default_rng(d))
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1, atol=1e-10)
    assert np.all(v @ w >= 0.4 - 1e-12)


@pytest.mark.parametrize("d", [2, 10, 98])
@pytest.mark.parametrize("r", [-0.3, 0.0, 0.2, 0.6])
def test_cap_cosine_distribution(d, r):
    w = _random_unit(d + 1, 7)
    t = sample_uniform_cap(np.tile(w, (10_000, 1)), r, np.random.default_rng(8)) @ w
    c_r = cap_volume_fraction(r, d)

    def cdf(x):
        return 1 - cap_volume_fraction(np.clip(x, r, 1), d) / c_r

    assert stats.kstest(t, cdf).pvalue > 0.001


def test_cap_matches_rejection_sampling():
    d, r = 2, 0.3
    w = _random_unit(d + 1, 9)
    sphere = sample_uniform_sphere(d, np.random.default_rng(10), size=200_000)
    accepted = sphere[sphere @ w > r] @ w
    drawn = sample_uniform_cap(np.tile(w, (10_000, 1)), r, np.random.default_rng(11)) @ w
    assert stats.ks_2samp(accepted, drawn).pvalue > 0.001


def test_cap_whole_sphere():
    d = 4
    w = _random_unit(d + 1, 12)
    t = sample_uniform_cap(np.tile(w, (10_000, 1)), -1.0, np.random.default_rng(13)) @ w
    assert stats.kstest(t, lambda x: 1 - cap_volume_fraction(np.clip(x, -1, 1), d)).pvalue > 0.001


@pytest.mark.parametrize("first", [0.9, -0.9, 0.0])
def test_cap_orthogonal_part_is_centered(first):
    d = 10
    w = np.zeros(d + 1)
    w[0] = first
    w[1] = np.sqrt(1 - first**2)
    v = sample_uniform_cap(np.tile(w, (20_000, 1)), 0.5, np.random.default_rng(14))
    t = v @ w
    orthogonal = v - t[:, None] * w
    assert np.all(t >= 0.5 - 1e-12)
    assert np.linalg.norm(orthogonal.mean(axis=0)) < 0.02


def test_cap_single_vector():
    w = _random_unit(4, 15)
    v = sample_uniform_cap(w, 0.8, np.random.default_rng(16))
    assert v.shape == (4,)
    assert v @ w >= 0.8 - 1e-12


def test_cap_empty():
    with pytest.raises(EmptyCapError):
        sample_uniform_cap(_random_unit(3, 17), 1.0, np.random.default_rng(18))


def test_density_uniform():
    v = sample_uniform_sphere(5, np.random.default_rng(19), size=10)
    np.testing.assert_array_equal(projected_normal_density(v, np.zeros(6)), np.ones(10))
    assert AngularGaussianParam.uniform(6).is_uniform


def test_density_single_point_quadrature():
    p, m = 3, np.array([0.0, 0.0, 2.0])
    i3, _ = integrate.quad(lambda rho: rho**2 * np.exp(-(rho**2) / 2 + 2 * rho), 0, np.inf, epsabs=0, epsrel=1e-13)
    expected = 2 * np.pi ** (p / 2) / special.gamma(p / 2) * (2 * np.pi) ** (-p / 2) * np.exp(-2.0) * i3
    value = projected_normal_density(np.array([0.0, 0.0, 1.0]), AngularGaussianParam(m))
    assert isinstance(value, float)
    assert value == pytest.approx(expected, rel=1e-8)


def _log_ip_quadrature(t, p):
    peak = 0.5 * (t + np.sqrt(t * t + 4 * (p - 1)))

    def log_integrand(rho):
        return (p - 1) * np.log(rho) - rho**2 / 2 + t * rho if rho > 0 else (-np.inf if p > 1 else 0.0)

    top = log_integrand(peak) if peak > 0 else 0.0
    lo, hi = max(0.0, peak - 40), peak + 40
    value, _ = integrate.quad(
        lambda rho: np.exp(log_integrand(rho) - top),
        lo,
        hi,
        points=[peak] if lo < peak < hi else None,
        epsabs=0,
        epsrel=1e-13,
        limit=400,
    )
    return top + np.log(value)


@pytest.mark.parametrize("p", [1, 2, 3, 10, 50, 200])
@pytest.mark.parametrize("t", [-30.0, -5.0, -1.0, -0.1, 0.0, 0.1, 1.0, 5.0, 30.0])
def test_log_ip_against_quadrature(t, p):
    assert log_ip(np.array([t]), p)[0] == pytest.approx(_log_ip_quadrature(t, p), abs=1e-8)


def test_density_integrates_to_one():
    rng = np.random.default_rng(20)
    v = sample_uniform_sphere(3, rng, size=100_000)
    f = projected_normal_density(v, np.array([1.5, 0.0, -0.5, 0.2]))
    se = f.std(ddof=1) / np.sqrt(f.size)
    assert abs(f.mean() - 1) < 4 * se


def test_projected_normal_sampler_matches_density():
    # Under the angular Gaussian law, E[1/f(V)] equals 1 (the uniform measure integrates to one).
    param = AngularGaussianParam(np.array([1.0, 0.5, 0.0]))
    v = sample_projected_normal(param, np.random.default_rng(21), 100_000)
    w = 1 / param.density(v)
    se = w.std(ddof=1) / np.sqrt(w.size)
    assert abs(w.mean() - 1) < 4 * se


def test_density_dimension_mismatch():
    with pytest.raises(DomainError):
        projected_normal_density(np.array([1.0, 0.0]), np.array([1.0, 0.0, 0.0]))
