import json

import numpy as np
import pytest

from drtubes import config
from drtubes.exceptions import ConfigError, DomainError
from drtubes.models import CandidateModel, CandidateSet
from drtubes.shapes import Emax, Exponential, Linear, SigmoidEmax, Spiral

from .strategies import BIOM_DOSES


def test_run_config_defaults():
    run = config.RunConfig()
    assert run.kappa == 20_000
    assert run.alpha == 0.05
    assert run.probability_options()["se_target"] == 1e-3
    assert config.RunConfig.from_json(run.to_json()) == run


def test_run_config_json_leaves_out_threads():
    run = config.RunConfig(seed=3, threads=8)
    assert "threads" not in run.to_json()
    assert config.RunConfig.from_json(run.to_json()) == config.RunConfig(seed=3)
    assert config.RunConfig.from_json({"threads": 4}).threads == 4


@pytest.mark.parametrize(
    "kwargs",
    [{"seed": -1}, {"seed": 2**64}, {"kappa": 10}, {"alpha": 0.9}, {"kappa": 500, "max_kappa": 200}, {"anchor_sampling": "grid"}],
)
def test_run_config_rejects(kwargs):
    with pytest.raises(DomainError):
        config.RunConfig(**kwargs)


def test_run_config_unknown_key():
    with pytest.raises(ConfigError):
        config.RunConfig.from_json({"kapa": 100})


def test_data_csv_round_trip(tmp_path):
    filename = tmp_path / "data.csv"
    dose = np.array([0.0, 0.05, 1.0])
    response = np.array([0.1, -2.5, 1 / 3])
    config.write_data_csv(filename, dose, response)
    d, r = config.read_data_csv(filename)
    assert d.tolist() == dose.tolist()
    assert r.tolist() == response.tolist()


def test_data_csv_reports_the_line(tmp_path):
    filename = tmp_path / "data.csv"
    filename.write_text("dose,response\n0,1.0\n1,oops\n")
    with pytest.raises(ConfigError, match="line 3") as info:
        config.read_data_csv(filename)
    assert info.value.line == 3


def test_data_csv_header(tmp_path):
    filename = tmp_path / "data.csv"
    filename.write_text("x,y\n0,1\n")
    with pytest.raises(ConfigError, match="header"):
        config.read_data_csv(filename)


def test_data_csv_non_finite(tmp_path):
    filename = tmp_path / "data.csv"
    filename.write_text("Dose,Response\n0,nan\n")
    with pytest.raises(ConfigError, match="line 2"):
        config.read_data_csv(filename)


def test_json_syntax_error(tmp_path):
    filename = tmp_path / "bad.json"
    filename.write_text('{\n  "candidates": [\n}\n')
    with pytest.raises(ConfigError) as info:
        config.read_json(filename)
    assert info.value.line == 3


def test_parse_candidates():
    cs = config.parse_candidates(
        {
            "candidates": [
                {"family": "linear"},
                {"family": "emax", "gamma": [0.001, 1.5]},
                {"family": "exponential", "gamma": {"fixed": 0.5}, "direction": "both"},
                {"family": "sigEmax", "gamma": [[0.01, 1], [1, 6]]},
                {"family": "spiral", "gamma": [0, 6.28], "lambda": 64},
            ]
        }
    )
    assert [type(m.family) for m in cs] == [Linear, Emax, Exponential, SigmoidEmax, Spiral]
    assert cs[2].is_fixed and cs[2].direction == "both"
    assert cs[4].family.lam == 64


def test_candidates_round_trip():
    cs = CandidateSet(
        (
            CandidateModel(Linear()),
            CandidateModel(Emax(), [0.001, 1.5], "decreasing"),
            CandidateModel(SigmoidEmax(), (0.05, 4.0)),
            CandidateModel(Spiral(16), [0, 1]),
        )
    )
    text = json.dumps(config.candidates_to_json(cs))
    again = config.parse_candidates(json.loads(text))
    assert config.candidates_to_json(again) == config.candidates_to_json(cs)


@pytest.mark.parametrize(
    "obj",
    [
        [{"family": "emax"}],
        [{"family": "emax", "gamma": [1, 2], "colour": "red"}],
        [{"gamma": [1, 2]}],
        [{"family": "linear", "lambda": 3}],
        {"models": []},
        "linear",
    ],
)
def test_candidate_schema_errors(obj):
    with pytest.raises(ConfigError):
        config.parse_candidates(obj)


def test_unknown_family():
    with pytest.raises(DomainError):
        config.parse_candidates([{"family": "logistic"}])


def test_parse_design():
    design = config.parse_design({"doses": list(BIOM_DOSES), "n_per_dose": [20]})
    assert design.n == 100
    with pytest.raises(ConfigError):
        config.parse_design({"doses": [0, 1]})


def test_parse_alternative():
    design = config.parse_design({"doses": list(BIOM_DOSES), "n_per_dose": [20]})
    assert config.parse_alternative({"family": "emax", "gamma": 0.2, "delta": 2.0}, design, 0.05).delta == 2.0
    by_effect = config.parse_alternative({"family": "linear", "effect_size": 0.5}, design, 0.05)
    assert by_effect.delta == pytest.approx(0.5 * np.linalg.norm(design.basis.apply(design.z_full)))
    by_power = config.parse_alternative({"family": "linear", "target_power": 0.05}, design, 0.05)
    assert by_power.delta == 0
    with pytest.raises(ConfigError):
        config.parse_alternative({"family": "linear", "delta": 1, "effect_size": 1}, design, 0.05)


@pytest.mark.parametrize("gamma", ["abc", ["abc", 1.5], {"fixed": "abc"}])
def test_non_numeric_gamma(gamma):
    with pytest.raises(ConfigError, match="not a number"):
        config.parse_candidates([{"family": "emax", "gamma": gamma}])
    design = config.parse_design({"doses": list(BIOM_DOSES), "n_per_dose": [20]})
    with pytest.raises(ConfigError, match="not a number"):
        config.parse_alternative({"family": "emax", "gamma": gamma, "delta": 1.0}, design, 0.05)


def test_non_numeric_design_and_delta():
    with pytest.raises(ConfigError, match="the design"):
        config.parse_design({"doses": [0, "high"], "n_per_dose": [10]})
    design = config.parse_design({"doses": list(BIOM_DOSES), "n_per_dose": [20]})
    with pytest.raises(ConfigError):
        config.parse_alternative({"family": "linear", "delta": "big"}, design, 0.05)


def test_out_of_range_gamma_stays_a_domain_error():
    with pytest.raises(DomainError):
        config.parse_candidates([{"family": "emax", "gamma": [1, 2, 3]}])
