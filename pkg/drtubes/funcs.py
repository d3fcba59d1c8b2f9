import io
import json
import time
from typing import Any, Dict, List, Mapping, Optional

import numpy as np

from drtubes import benchmark, config, lrtest, tubes, validators
from drtubes import rng as rngs
from drtubes.contrasts import DEFAULT_REPS, ContrastMatrix, max_t_contrast_test
from drtubes.exceptions import ConfigError
from drtubes.files import BenchmarkFile, PowerCurveFile, ShapeCurveFile
from drtubes.models import CandidateSet, Design, group_observations
from drtubes.typing import CurveKind, PathLike


def write_json(obj: Any, stream: io.TextIOBase) -> None:
    """Write `obj` as sorted, indented JSON followed by a newline."""
    json.dump(obj, stream, sort_keys=True, indent=2, allow_nan=True)
    stream.write("\n")


def lr_test(
    dose: np.ndarray,
    response: np.ndarray,
    cs: CandidateSet,
    run: config.RunConfig,
    contrasts: Optional[CandidateSet] = None,
    contrast_reps: int = DEFAULT_REPS,
) -> Dict[str, Any]:
    """Run the LR test on raw observations and build the JSON report.

    Args:
        dose: Dose of every observation.
        response: Response of every observation.
        cs: The candidate models.
        run: Monte Carlo and test settings.
        contrasts: Fixed shapes for an additional multiple contrast test.
        contrast_reps: Null simulations of the contrast test.

    Returns:
        The report, which embeds every input needed to re-run it.
    """
    start = time.perf_counter()
    design, y = group_observations(dose, response)
    report = lrtest.run_lr_test(
        y,
        design,
        cs,
        run.kappa,
        run.alpha,
        run.seed,
        grid_size=run.grid_size,
        **run.probability_options(),
    )
    out = {
        "inputs": {
            "data": {"dose": np.asarray(dose, dtype=float).tolist(), "response": np.asarray(response, dtype=float).tolist()},
            "candidates": config.candidates_to_json(cs),
            "config": run.to_json(),
            "contrasts": None if contrasts is None else config.candidates_to_json(contrasts),
            "contrast_reps": contrast_reps,
        },
        "design": design.to_json(),
        "report": report.to_json(),
    }
    if contrasts is not None:
        matrix = ContrastMatrix.from_models(list(contrasts), design)
        result = max_t_contrast_test(
            y, design, matrix, run.alpha, contrast_reps, rngs.sub_seed(run.seed, rngs.NULL_SIMULATION), run.threads
        )
        out["contrast_test"] = result.to_json()
    out["runtime_seconds"] = time.perf_counter() - start
    return out


def lr_test_file(
    data: PathLike,
    candidates: PathLike,
    run: config.RunConfig,
    contrasts: Optional[PathLike] = None,
    contrast_reps: int = DEFAULT_REPS,
) -> Dict[str, Any]:
    """Run the LR test on a `dose,response` CSV file against a candidate JSON file."""
    dose, response = config.read_data_csv(data)
    cs = config.read_candidates(candidates)
    extra = None if contrasts is None else config.read_candidates(contrasts)
    return lr_test(dose, response, cs, run, extra, contrast_reps)


def rerun_report(report: Mapping[str, Any]) -> Dict[str, Any]:
    """Re-run a report from the inputs it embeds."""
    try:
        inputs = report["inputs"]
        data = inputs["data"]
        cs = config.parse_candidates(inputs["candidates"])
        run = config.RunConfig.from_json(inputs["config"])
        contrasts = None if inputs.get("contrasts") is None else config.parse_candidates(inputs["contrasts"])
        reps = inputs.get("contrast_reps", DEFAULT_REPS)
    except (KeyError, TypeError) as e:
        msg = f"not a drtubes report: missing {e}"
        raise ConfigError(msg) from None
    return lr_test(np.array(data["dose"]), np.array(data["response"]), cs, run, contrasts, reps)


def _design(study: Mapping[str, Any]) -> Design:
    if "design" not in study:
        return benchmark.biom_design()
    return config.parse_design(study["design"])


def _candidates(study: Mapping[str, Any]) -> CandidateSet:
    if "candidates" not in study:
        msg = "the study needs a 'candidates' list"
        raise ConfigError(msg)
    return config.parse_candidates(study["candidates"])


def critical_value(study: Mapping[str, Any], run: config.RunConfig) -> Dict[str, Any]:
    """Critical value of the LR test for the study's design and candidates."""
    start = time.perf_counter()
    design = _design(study)
    cs = _candidates(study)
    cs.validate(design)
    crit = tubes.critical_value(
        cs,
        design,
        None,
        run.alpha,
        run.tol,
        run.kappa,
        run.seed,
        **run.probability_options(),
    )
    return {
        "design": design.to_json(),
        "candidates": cs.to_json(),
        "config": run.to_json(),
        "critical_value": crit.to_json(),
        "runtime_seconds": time.perf_counter() - start,
    }


def _r_crit(study: Mapping[str, Any], cs: CandidateSet, design: Design, run: config.RunConfig) -> float:
    if "r_crit" in study:
        return float(study["r_crit"])
    return tubes.critical_value(
        cs,
        design,
        None,
        run.alpha,
        run.tol,
        run.kappa,
        rngs.sub_seed(run.seed, rngs.BISECTION),
        **run.probability_options(),
    ).r


def power(study: Mapping[str, Any], run: config.RunConfig) -> Dict[str, Any]:
    """LR power under the study's alternative, with the locally optimal power for reference."""
    start = time.perf_counter()
    design = _design(study)
    cs = _candidates(study)
    cs.validate(design)
    if "alternative" not in study:
        msg = "the study needs an 'alternative' object"
        raise ConfigError(msg)
    alt = config.parse_alternative(study["alternative"], design, run.alpha)
    r_crit = _r_crit(study, cs, design, run)
    est = tubes.power(cs, design, None, r_crit, alt, run.kappa, run.seed, **run.sampler_options())
    local = alt.local_power(alt.unit_prediction(design), design, run.alpha)
    return {
        "design": design.to_json(),
        "candidates": cs.to_json(),
        "config": run.to_json(),
        "alternative": alt.to_json(),
        "r_crit": r_crit,
        "power": est.to_json(),
        "mc_se": est.se,
        "local_optimal_power": local,
        "runtime_seconds": time.perf_counter() - start,
    }


def sample_size(study: Mapping[str, Any], run: config.RunConfig) -> Dict[str, Any]:
    """Smallest per-arm multiplier of the allocation that reaches the target power."""
    start = time.perf_counter()
    cs = _candidates(study)
    doses = study.get("doses", list(benchmark.BIOM_DOSES))
    allocation = study.get("allocation", [1] * len(doses))
    truth = study.get("truth")
    if truth is None or "effect_size" not in study:
        msg = "the study needs a 'truth' shape and an 'effect_size'"
        raise ConfigError(msg)
    family = config.parse_family(truth)
    result = tubes.sample_size(
        cs,
        np.asarray(doses, dtype=float),
        np.asarray(allocation),
        family,
        truth.get("gamma"),
        study["effect_size"],
        study.get("target_power", 0.8),
        run.alpha,
        run.kappa,
        run.seed,
        n_min=study.get("n_min", 2),
        n_max=study.get("n_max", 1000),
        tol=run.tol,
        power_tol=study.get("power_tol"),
        **run.sampler_options(),
    )
    return {
        "candidates": cs.to_json(),
        "config": run.to_json(),
        "sample_size": result.to_json(),
        "mc_se": result.power.se,
        "runtime_seconds": time.perf_counter() - start,
    }


def _scenarios(entries: Optional[List[Mapping[str, Any]]]) -> Optional[List[benchmark.Scenario]]:
    if entries is None:
        return None
    scenarios = []
    for i, entry in enumerate(entries):
        family = config.parse_family(entry)
        label = entry.get("label", f"{i + 1} ({family.name})")
        scenarios.append(benchmark.Scenario(label, family, entry.get("gamma")))
    return scenarios


def benchmark_table(
    study: Mapping[str, Any], run: config.RunConfig, stream: io.TextIOBase, reps: int = DEFAULT_REPS
) -> None:
    """Write the power table of the study; an empty study gives the five-scenario default."""
    design = _design(study)
    cs = config.parse_candidates(study["candidates"]) if "candidates" in study else benchmark.benchmark_candidates()
    scenarios = _scenarios(study.get("scenarios")) or benchmark.five_scenarios()
    comparators = _scenarios(study.get("comparators")) or scenarios[:4]
    rows = benchmark.run_benchmark(
        scenarios,
        cs,
        design,
        comparators,
        study.get("target_powers", (0.5, 0.8)),
        run.alpha,
        run.kappa,
        reps,
        run.seed,
        r_crit=study.get("r_crit"),
        **run.sampler_options(),
    )
    labels = [c.label.split(" ")[0] for c in comparators]
    BenchmarkFile(stream, labels).write_complete(rows)


def curves(
    study: Mapping[str, Any], kind: CurveKind, run: config.RunConfig, stream: io.TextIOBase
) -> None:
    """Write shape curves or an Emax power curve as long-format CSV."""
    kind = validators.choice(kind, CurveKind)
    design = _design(study)
    if kind == "shapes":
        cs = _candidates(study)
        ShapeCurveFile(stream).write_complete(
            benchmark.shape_curves(cs, design, study.get("num_doses", 101), study.get("per_model", 5))
        )
        return
    curve = benchmark.emax_power_curve(
        design,
        tuple(study.get("box", (0.001, 1.5))),
        study.get("local_gammas"),
        study.get("num", 25),
        study.get("target_power", 0.8),
        run.alpha,
        run.kappa,
        run.seed,
        r_crit=study.get("r_crit"),
        **run.sampler_options(),
    )
    PowerCurveFile(stream).write_complete([curve])
