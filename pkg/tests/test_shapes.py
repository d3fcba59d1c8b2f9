import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from drtubes.exceptions import DomainError
from drtubes.shapes import (
    FAMILIES,
    Cosine,
    Emax,
    Exponential,
    Linear,
    PowerRatio,
    SigmoidEmax,
    Spiral,
    make_family,
)
from drtubes.sphere import build_contrast_basis, standardize

from .strategies import BIOM_DOSES


def test_emax_values():
    np.testing.assert_allclose(Emax().values(0.2, BIOM_DOSES), [0, 0.2, 0.5, 0.75, 1 / 1.2], atol=1e-15)


def test_linear_values():
    np.testing.assert_array_equal(Linear().values(None, [0, 1, 2]), [0, 1, 2])


def test_exponential_values():
    np.testing.assert_allclose(Exponential().values(0.5, [0, 1]), [0, np.expm1(2)])


def test_sigmoid_emax_values():
    x = SigmoidEmax().values((0.05, 4.0), BIOM_DOSES)
    np.testing.assert_allclose(x, np.array(BIOM_DOSES) ** 4 / (np.array(BIOM_DOSES) ** 4 + 0.05**4))


def test_cosine_and_power_ratio_values():
    np.testing.assert_allclose(Cosine().values(0.3, [0, 1]), np.cos([0.3, 1.3]))
    np.testing.assert_allclose(PowerRatio().values(2.0, [0, 1, 2]), [0, 1 / 2.5, 4 / 5.5])


def test_stacked_parameters():
    x = Emax().values(np.array([0.1, 0.2, 0.3]), BIOM_DOSES)
    assert x.shape == (3, 5)
    np.testing.assert_allclose(x[1], Emax().values(0.2, BIOM_DOSES))
    assert SigmoidEmax().values(np.array([[0.05, 4.0], [0.1, 2.0]]), BIOM_DOSES).shape == (2, 5)
    assert Linear().values(np.zeros((4, 0)), BIOM_DOSES).shape == (4, 5)


@pytest.mark.parametrize("gamma", [0.1, 0.5 / np.log(6), 2.0])
def test_exponential_stable_form_has_the_same_shape(gamma):
    basis = build_contrast_basis(5)
    family = Exponential()
    np.testing.assert_allclose(
        standardize(family.values(gamma, BIOM_DOSES), basis),
        standardize(family.stable_values(gamma, BIOM_DOSES), basis),
        atol=1e-12,
    )


@given(st.floats(min_value=0.05, max_value=5.0))
def test_monotone_families(gamma):
    doses = np.linspace(0, 1, 21)
    for family, g in [
        (Linear(), None),
        (Emax(), gamma),
        (Exponential(), gamma),
        (SigmoidEmax(), (gamma, 2.0)),
        (PowerRatio(), gamma),
    ]:
        assert np.all(np.diff(family.values(g, doses)) >= 0), family.name


@pytest.mark.parametrize("family", [Emax(), Exponential(), PowerRatio()])
@pytest.mark.parametrize("gamma", [0.0, -1.0, np.inf, np.nan])
def test_positive_parameter_domain(family, gamma):
    with pytest.raises(DomainError):
        family.values(gamma, BIOM_DOSES)


def test_sigmoid_emax_needs_two_parameters():
    with pytest.raises(DomainError):
        SigmoidEmax().values(np.array([[0.1]]), BIOM_DOSES)


@pytest.mark.parametrize("d", [2, 5, 20])
@pytest.mark.parametrize("lam", [8, 64])
def test_spiral_is_on_the_sphere(d, lam):
    spiral = Spiral(lam)
    gamma = np.linspace(0, 2 * np.pi, 257).reshape(-1, 1)
    curve = spiral.unit_curve(gamma, d)
    np.testing.assert_allclose(np.linalg.norm(curve, axis=1), 1, atol=1e-12)


def test_spiral_values_standardize_to_its_curve():
    spiral = Spiral(16)
    basis = build_contrast_basis(6)
    gamma = np.array([[0.3], [1.7]])
    np.testing.assert_allclose(
        standardize(spiral.values(gamma, np.zeros(6)), basis), spiral.unit_curve(gamma, 4), atol=1e-12
    )


def test_spiral_needs_three_observations():
    with pytest.raises(DomainError):
        Spiral().values(0.5, [0.0, 1.0])


def test_spiral_frequency_domain():
    with pytest.raises(DomainError):
        Spiral(0)
    assert Spiral(64).to_json() == {"family": "spiral", "lambda": 64}


@pytest.mark.parametrize(
    "name, expected",
    [("EMAX", Emax), ("sigemax", SigmoidEmax), ("Linear", Linear), ("powerratio", PowerRatio)],
)
def test_make_family_ignores_case(name, expected):
    assert isinstance(make_family(name), expected)


def test_make_family_unknown():
    with pytest.raises(DomainError, match="valid choices"):
        make_family("logistic")


def test_registry_names():
    assert {cls.name for cls in FAMILIES.values()} == set(FAMILIES)
