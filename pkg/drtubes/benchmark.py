"""Power benchmarks of the LR test against locally optimal and contrast tests."""

import dataclasses
import logging
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from drtubes import rng as rngs
from drtubes import tubes
from drtubes.contrasts import ContrastMatrix, contrast_power
from drtubes.exceptions import DomainError
from drtubes.models import CandidateModel, CandidateSet, Design, arc_length_grid, zero_one
from drtubes.shapes import Emax, Exponential, Linear, ShapeFamily, SigmoidEmax

logger = logging.getLogger(__name__)

BIOM_DOSES = (0.0, 0.05, 0.2, 0.6, 1.0)
BIOM_N_PER_DOSE = 20


def biom_design(n_per_dose: int = BIOM_N_PER_DOSE) -> Design:
    return Design.balanced(BIOM_DOSES, n_per_dose)


@dataclasses.dataclass(frozen=True, eq=False)
class Scenario:
    """A true mean shape for power simulations."""

    label: str
    family: ShapeFamily
    gamma: Any = None

    @property
    def model(self) -> CandidateModel:
        return CandidateModel(self.family, self.gamma)

    def alternative(self, design: Design, target_power: float, alpha: float = 0.05) -> tubes.Alternative:
        """The alternative at which the locally optimal test has `target_power`."""
        delta = tubes.solve_delta(self.family, self.gamma, design, None, target_power, alpha)
        return tubes.Alternative(self.family, self.gamma, delta)

    def group_means(self, design: Design, alt: tubes.Alternative) -> np.ndarray:
        """Dose group means, in units of sigma, that produce the non-centrality of `alt`."""
        x = self.family.values(self.gamma, design.z_full)
        beta = alt.delta / np.linalg.norm(design.basis.apply(x))
        return beta * self.family.values(self.gamma, design.doses)


def five_scenarios() -> List[Scenario]:
    return [
        Scenario("1 (Linear)", Linear()),
        Scenario("2 (Emax)", Emax(), 0.2),
        Scenario("3 (Exp 1)", Exponential(), 0.1),
        Scenario("4 (Exp 2)", Exponential(), 0.5 / np.log(6)),
        Scenario("5 (Sigm)", SigmoidEmax(), (0.05, 4.0)),
    ]


def benchmark_candidates() -> CandidateSet:
    return CandidateSet(
        (
            CandidateModel(Linear()),
            CandidateModel(Emax(), (0.001, 1.5)),
            CandidateModel(Exponential(), (0.1, 2.0)),
        )
    )


@dataclasses.dataclass(frozen=True)
class BenchmarkRow:
    target_power: float
    scenario: str
    lr: tubes.TubeEstimate
    local: Tuple[float, ...]
    mcpmod: float
    mcpmod_se: float


def run_benchmark(
    scenarios: Sequence[Scenario],
    cs: CandidateSet,
    design: Design,
    comparators: Optional[Sequence[Scenario]] = None,
    target_powers: Sequence[float] = (0.5, 0.8),
    alpha: float = 0.05,
    kappa: int = tubes.DEFAULT_KAPPA,
    reps: int = 100_000,
    seed: int = 0,
    *,
    r_crit: Optional[float] = None,
    **mc_options: Any,
) -> List[BenchmarkRow]:
    """Power of every method in every scenario, one row per (target power, scenario).

    Args:
        scenarios: The true shapes.
        cs: The LR candidate set.
        design: The dose design.
        comparators: Shapes with a locally optimal test and an optimal
            contrast each; defaults to the first four scenarios.
        target_powers: Powers of the locally optimal test for the true shape.
        alpha: One-sided level of every test.
        kappa: Tube sample size for the LR power.
        reps: Simulated data sets for the contrast test.
        seed: The master seed.
        r_crit: The LR critical value; computed when not given.
        **mc_options: Passed on to the tube estimator.
    """
    comparators = list(scenarios[:4] if comparators is None else comparators)
    threads = mc_options.get("threads", 1)
    if r_crit is None:
        r_crit = tubes.critical_value(
            cs, design, None, alpha, kappa=kappa, seed=rngs.sub_seed(seed, rngs.BENCHMARK, 0), **mc_options
        ).r
    logger.info("benchmark with r_crit=%.4f", r_crit)
    contrasts = ContrastMatrix.from_models([c.model for c in comparators], design)
    tests = [tubes.Alternative(c.family, c.gamma).unit_prediction(design) for c in comparators]

    rows = []
    for p, target in enumerate(target_powers):
        for i, scenario in enumerate(scenarios):
            alt = scenario.alternative(design, target, alpha)
            lr = tubes.power(
                cs, design, None, r_crit, alt, kappa, rngs.sub_seed(seed, rngs.BENCHMARK, 1, p, i), **mc_options
            )
            local = tuple(alt.local_power(x, design, alpha) for x in tests)
            mcp, mcp_se = contrast_power(
                design,
                contrasts,
                scenario.group_means(design, alt),
                alpha,
                reps,
                rngs.sub_seed(seed, rngs.BENCHMARK, 2, p, i),
                threads,
            )
            logger.info("power %.0f%% %s: LR %.4f MCP-Mod %.4f", 100 * target, scenario.label, lr.value, mcp)
            rows.append(BenchmarkRow(target, scenario.label, lr, local, mcp, mcp_se))
    return rows


@dataclasses.dataclass(frozen=True)
class PowerCurve:
    """Power against the true parameter of a one-parameter model.

    Attributes:
        gamma: True parameter values, equally spaced in arc length.
        arc: Position of each gamma along the model curve, from 0 to 1.
        lr: LR power estimates.
        local_gamma: Parameters of the locally optimal tests.
        local: (len(gamma), len(local_gamma)) powers of the locally optimal tests.
        r_crit: The LR critical value used.
    """

    gamma: np.ndarray
    arc: np.ndarray
    lr: Tuple[tubes.TubeEstimate, ...]
    local_gamma: np.ndarray
    local: np.ndarray
    r_crit: float


def emax_power_curve(
    design: Design,
    box: Tuple[float, float] = (0.001, 1.5),
    local_gammas: Optional[Sequence[float]] = None,
    num: int = 25,
    target_power: float = 0.8,
    alpha: float = 0.05,
    kappa: int = tubes.DEFAULT_KAPPA,
    seed: int = 0,
    *,
    r_crit: Optional[float] = None,
    **mc_options: Any,
) -> PowerCurve:
    """LR and locally optimal power when the truth is an Emax model with gamma in `box`.

    The locally optimal tests default to four parameters equally spaced
    along the model curve.
    """
    model = CandidateModel(Emax(), box)
    cs = CandidateSet((model,))
    if r_crit is None:
        r_crit = tubes.critical_value(
            cs, design, None, alpha, kappa=kappa, seed=rngs.sub_seed(seed, rngs.BENCHMARK, 0), **mc_options
        ).r
    gammas = arc_length_grid(model, design, None, num)
    local_gammas = arc_length_grid(model, design, None, 4) if local_gammas is None else np.asarray(local_gammas)
    tests = [model.standardized(np.array([[g]]), design)[0] for g in local_gammas]

    lr = []
    local = np.empty((gammas.shape[0], len(tests)))
    for i, gamma in enumerate(gammas):
        alt = Scenario("emax", Emax(), float(gamma)).alternative(design, target_power, alpha)
        lr.append(
            tubes.power(cs, design, None, r_crit, alt, kappa, rngs.sub_seed(seed, rngs.BENCHMARK, 3, i), **mc_options)
        )
        local[i] = [alt.local_power(x, design, alpha) for x in tests]
    return PowerCurve(
        gamma=gammas,
        arc=np.linspace(0, 1, gammas.shape[0]),
        lr=tuple(lr),
        local_gamma=np.asarray(local_gammas, dtype=float),
        local=local,
        r_crit=float(r_crit),
    )


def shape_curves(
    cs: CandidateSet, design: Design, num_doses: int = 101, per_model: int = 5
) -> List[Tuple[str, np.ndarray, np.ndarray]]:
    """Zero-one standardized shapes of every candidate on a fine dose grid.

    Interval models contribute `per_model` curves equally spaced in arc
    length; fixed models one curve.

    Returns:
        (curve id, doses, values) triples.
    """
    doses = np.linspace(design.doses[0], design.doses[-1], num_doses)
    curves = []
    for model in cs:
        if not model.family.group_constant:
            msg = f"{model.family.name} shapes are not functions of the dose"
            raise DomainError(msg)
        if model.family.n_params == 0 or model.is_fixed:
            gammas = model.gamma[:, 0].reshape(1, -1)
        elif model.family.n_params == 1:
            gammas = arc_length_grid(model, design, None, per_model).reshape(-1, 1)
        else:
            gammas = model.grid(per_model)
        for gamma in gammas:
            values = model.family.values(gamma.reshape(1, model.family.n_params), doses)[0]
            label = CandidateModel(model.family, gamma if gamma.size else None).label
            curves.append((label, doses, zero_one(values)))
    return curves
