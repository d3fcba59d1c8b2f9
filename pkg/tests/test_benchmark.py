import numpy as np
import pytest

from drtubes import benchmark
from drtubes.exceptions import DomainError
from drtubes.models import CandidateModel, CandidateSet
from drtubes.shapes import Emax, Linear, Spiral
from drtubes.tubes import Alternative


@pytest.fixture
def biom():
    return benchmark.biom_design()


def test_five_scenarios():
    labels = [s.label for s in benchmark.five_scenarios()]
    assert labels == ["1 (Linear)", "2 (Emax)", "3 (Exp 1)", "4 (Exp 2)", "5 (Sigm)"]
    assert [m.label for m in benchmark.benchmark_candidates()] == [
        "linear",
        "emax[[0.001, 1.5]]",
        "exponential[[0.1, 2.0]]",
    ]


def test_group_means_give_the_noncentrality(biom):
    for scenario in benchmark.five_scenarios():
        alt = scenario.alternative(biom, 0.8)
        means = scenario.group_means(biom, alt)
        assert means.shape == (5,)
        expanded = means[biom.group_index]
        assert np.linalg.norm(biom.basis.apply(expanded)) == pytest.approx(alt.delta, rel=1e-9)


def test_misspecified_emax_test(biom):
    alt = benchmark.Scenario("emax", Emax(), 0.24).alternative(biom, 0.8)
    x = Alternative(Emax(), 0.001).unit_prediction(biom)
    assert 0.45 <= alt.local_power(x, biom) <= 0.55


def test_shape_curves_reject_the_spiral(biom):
    cs = CandidateSet((CandidateModel(Spiral(8), [0, 1]),))
    with pytest.raises(DomainError):
        benchmark.shape_curves(cs, biom)


def test_shape_curves(biom):
    cs = CandidateSet((CandidateModel(Linear()), CandidateModel(Emax(), [0.001, 1.5])))
    curves = benchmark.shape_curves(cs, biom, num_doses=21, per_model=3)
    assert [label for label, _, _ in curves][0] == "linear"
    assert len(curves) == 4
    for _, doses, values in curves:
        assert doses.shape == values.shape == (21,)
        assert values[0] == pytest.approx(0, abs=1e-12)
        assert values[-1] == pytest.approx(1)


def test_emax_power_curve(biom):
    curve = benchmark.emax_power_curve(biom, num=4, kappa=200, seed=3, r_crit=0.197)
    np.testing.assert_allclose(curve.gamma, curve.local_gamma)
    np.testing.assert_allclose(curve.arc, [0, 1 / 3, 2 / 3, 1])
    np.testing.assert_allclose(np.diag(curve.local), 0.8, atol=1e-6)
    assert np.all(curve.local <= 0.8 + 1e-6)
    assert len(curve.lr) == 4
    assert all(est.value > 0 for est in curve.lr)


def test_single_shape_benchmark(biom):
    scenarios = [benchmark.Scenario("lin", Linear())]
    cs = CandidateSet((CandidateModel(Linear()),))
    rows = benchmark.run_benchmark(scenarios, cs, biom, kappa=200, reps=1000, seed=4)
    assert [(row.target_power, row.scenario) for row in rows] == [(0.5, "lin"), (0.8, "lin")]
    for row in rows:
        assert row.local[0] == pytest.approx(row.target_power, abs=1e-6)
        assert abs(row.lr.value - row.target_power) < 5 * row.lr.se + 0.01
        assert 0 < row.mcpmod < 1
