"""The likelihood-ratio trend test.

For the model y = alpha + beta * x_gamma(z) + e with normal errors, the LR
statistic for beta = 0 against beta > 0 is a decreasing function of

    R = sup over gamma of x~_gamma^T y~,

the largest correlation between the standardized observation and any
standardized prediction. Its null distribution is the volume of a tube
around the model manifold (see `drtubes.tubes`).
"""

import dataclasses
import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import optimize

from drtubes import rng as rngs
from drtubes import tubes, validators
from drtubes.exceptions import DegenerateShapeError, InvalidDesignError
from drtubes.models import CandidateModel, CandidateSet, Design
from drtubes.sphere import ContrastBasis, cap_volume_fraction, is_degenerate, standardize
from drtubes.typing import FloatArray

logger = logging.getLogger(__name__)

GRID_SIZE = 512
REFINE_STARTS = 3


def correlation_statistic(y_tilde: np.ndarray, x_tilde: np.ndarray) -> float:
    """R_gamma = x~^T y~, clipped to [-1, 1]."""
    return float(np.clip(np.dot(y_tilde, x_tilde), -1.0, 1.0))


def lr_statistic_from_R(R: float, n: int) -> float:
    """S(R) = (1 - 1{R > 0} R^2)^(n/2), the likelihood ratio as a function of R."""
    R = validators.correlation(R)
    if R <= 0:
        return 1.0
    return float((1 - R * R) ** (n / 2))


def single_shape_pvalue(r: float, d: int) -> float:
    """P0(R > r) for a single fixed shape: the volume of one cap."""
    return cap_volume_fraction(validators.correlation(r), d)


@dataclasses.dataclass(frozen=True)
class Profile:
    r: float
    gamma: FloatArray
    sign: int


def _branch_correlations(
    model: CandidateModel, grid: FloatArray, y_tilde: np.ndarray, design: Design
) -> FloatArray:
    """Correlations of y~ with the increasing branch at every grid point; -inf where degenerate."""
    x = np.atleast_2d(model.family.stable_values(grid, design.z_full))
    bad = is_degenerate(x, design.basis)
    out = np.full(grid.shape[0], -np.inf)
    if not np.all(bad):
        out[~bad] = np.clip(standardize(x[~bad], design.basis) @ y_tilde, -1, 1)
    return out


def _local_maxima(values: np.ndarray, shape: Tuple[int, ...]) -> List[int]:
    grid = values.reshape(shape)
    padded = np.pad(grid, 1, constant_values=-np.inf)
    is_max = np.isfinite(grid)
    for axis in range(grid.ndim):
        for shift in (-1, 1):
            neighbor = np.roll(padded, shift, axis=axis)[tuple(slice(1, -1) for _ in range(grid.ndim))]
            is_max &= grid >= neighbor
    candidates = np.flatnonzero(is_max.ravel())
    order = np.argsort(-values[candidates], kind="stable")
    return candidates[order[:REFINE_STARTS]].tolist()


def profile_sup_correlation(
    y_tilde: np.ndarray,
    model: CandidateModel,
    design: Design,
    basis: Optional[ContrastBasis] = None,
    grid_size: int = GRID_SIZE,
) -> Profile:
    """R = sup over the parameter box of the correlation with y~.

    The box is scanned on a grid (log-spaced for scale parameters) and the
    best three local maxima are refined: with a bounded Brent search for one
    parameter and bounded Nelder-Mead for two.

    Raises:
        DegenerateShapeError: The shape is constant for every grid point.
    """
    if basis is not None and basis.n != design.n:
        msg = f"basis for n={basis.n} does not match the design with n={design.n}"
        raise InvalidDesignError(msg)
    grid = model.grid(grid_size)
    corr = _branch_correlations(model, grid, y_tilde, design)
    if np.all(np.isneginf(corr)):
        msg = f"{model.label} is constant on the design over the whole grid"
        raise DegenerateShapeError(msg)

    best: Optional[Profile] = None
    for sign in model.signs:
        values = np.where(np.isfinite(corr), sign * corr, -np.inf)
        profile = _refine(model, grid, values, sign, y_tilde, design, grid_size)
        if best is None or profile.r > best.r:
            best = profile
    return best


def _refine(
    model: CandidateModel,
    grid: FloatArray,
    values: FloatArray,
    sign: int,
    y_tilde: np.ndarray,
    design: Design,
    grid_size: int,
) -> Profile:
    top = int(np.argmax(values))
    best = Profile(r=float(values[top]), gamma=grid[top].copy(), sign=sign)
    k = model.family.n_params
    if k == 0 or model.is_fixed:
        return best

    lo, hi = model.gamma[:, 0], model.gamma[:, 1]
    logscale = model.family.spacing == "log" and bool(np.all(lo > 0))
    to_u = np.log if logscale else (lambda g: g)
    from_u = np.exp if logscale else (lambda u: u)
    u_lo, u_hi = to_u(lo), to_u(hi)

    def objective(u: np.ndarray) -> float:
        gamma = np.clip(from_u(np.atleast_1d(u)), lo, hi).reshape(1, k)
        value = _branch_correlations(model, gamma, y_tilde, design)[0]
        return 2.0 if not np.isfinite(value) else -sign * value

    shape = (grid.shape[0],) if k == 1 else tuple(np.unique(grid[:, j]).size for j in range(k))
    for index in _local_maxima(values, shape):
        if k == 1:
            i = index
            a = to_u(grid[max(i - 1, 0), 0])
            b = to_u(grid[min(i + 1, grid.shape[0] - 1), 0])
            if a == b:
                continue
            xatol = 1e-9 if logscale else 1e-7 * float(u_hi[0] - u_lo[0])
            res = optimize.minimize_scalar(objective, bounds=(a, b), method="bounded", options={"xatol": xatol})
            u_best = np.array([res.x])
        else:
            res = optimize.minimize(
                objective,
                to_u(grid[index]),
                method="Nelder-Mead",
                bounds=list(zip(u_lo, u_hi)),
                options={"xatol": 1e-9, "fatol": 1e-14, "maxiter": 2000},
            )
            u_best = np.atleast_1d(res.x)
        r = -float(res.fun)
        if r > best.r:
            best = Profile(r=r, gamma=np.clip(from_u(u_best), lo, hi), sign=sign)
    logger.debug("profiled %s: r=%.6f gamma=%s", model.label, best.r, best.gamma)
    return best


@dataclasses.dataclass(frozen=True)
class FitResult:
    """Least-squares fit of alpha + sign * beta * x_gamma(z) with beta >= 0.

    Attributes:
        alpha_hat: The intercept.
        beta_hat: The non-negative slope on the chosen branch.
        gamma_hat: The profiled shape parameter.
        r: The sup correlation.
        sign: +1 for the increasing branch, -1 for the decreasing one.
        rss: The residual sum of squares.
    """

    alpha_hat: float
    beta_hat: float
    gamma_hat: FloatArray
    r: float
    sign: int
    rss: float

    def predict(self, model: CandidateModel, doses: np.ndarray) -> FloatArray:
        x = model.family.values(self.gamma_hat, doses)
        return self.alpha_hat + self.sign * self.beta_hat * x

    def to_json(self) -> Dict[str, Any]:
        return {
            "alpha_hat": self.alpha_hat,
            "beta_hat": self.beta_hat,
            "gamma_hat": self.gamma_hat.tolist(),
            "r": self.r,
            "sign": self.sign,
            "rss": self.rss,
        }


def fit_model(
    y: np.ndarray,
    design: Design,
    model: CandidateModel,
    grid_size: int = GRID_SIZE,
) -> FitResult:
    """Fit one candidate model by profiling gamma and solving for (alpha, beta).

    beta is clamped to the model's direction, so beta_hat = 0 when no branch
    correlates positively with y. A constant y fits with r = 0 and beta = 0.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (design.n,):
        msg = f"expected {design.n} responses, got shape {y.shape}"
        raise InvalidDesignError(msg)
    mean_y = float(np.mean(y))
    if bool(is_degenerate(y, design.basis)):
        gamma = model.grid(1)[0]
        return FitResult(mean_y, 0.0, gamma, 0.0, model.signs[0], float(np.sum((y - mean_y) ** 2)))

    y_tilde = standardize(y, design.basis)
    profile = profile_sup_correlation(y_tilde, model, design, None, grid_size)
    x = model.family.values(profile.gamma, design.z_full)
    cx = x - np.mean(x)
    cy = y - mean_y
    beta = max(0.0, float(np.linalg.norm(cy) / np.linalg.norm(cx)) * profile.r)
    alpha = mean_y - profile.sign * beta * float(np.mean(x))
    resid = y - alpha - profile.sign * beta * x
    return FitResult(
        alpha_hat=alpha,
        beta_hat=beta,
        gamma_hat=np.asarray(profile.gamma, dtype=float),
        r=profile.r,
        sign=profile.sign,
        rss=float(resid @ resid),
    )


@dataclasses.dataclass(frozen=True)
class ModelResult:
    label: str
    r: float
    lr_statistic: float
    fit: FitResult
    p_adjusted: float
    p_unadjusted: float
    se_adjusted: float
    se_unadjusted: float

    @property
    def gamma_hat(self) -> FloatArray:
        return self.fit.gamma_hat

    def to_json(self) -> Dict[str, Any]:
        return {
            "model": self.label,
            "r": self.r,
            "lr_statistic": self.lr_statistic,
            "fit": self.fit.to_json(),
            "p_adjusted": self.p_adjusted,
            "p_unadjusted": self.p_unadjusted,
            "mc_se": {"p_adjusted": self.se_adjusted, "p_unadjusted": self.se_unadjusted},
        }


@dataclasses.dataclass(frozen=True)
class LrTestReport:
    """Per-model fits and p-values, and the overall test decision.

    Attributes:
        models: One result per candidate model, in candidate order.
        r: The overall statistic, max_i r_i.
        lr_statistic: S(r) on the n of the design.
        p: P0(R > r) over the full candidate manifold.
        p_se: Monte Carlo standard error of `p`.
        alpha: The level.
        r_crit: The critical value at `alpha`, when it was computed.
        kappa: The base Monte Carlo sample size.
        seed: The master seed.
    """

    models: Tuple[ModelResult, ...]
    r: float
    lr_statistic: float
    p: float
    p_se: float
    alpha: float
    r_crit: Optional[tubes.CriticalValue]
    kappa: int
    seed: int

    @property
    def reject(self) -> bool:
        return self.p <= self.alpha

    @property
    def best(self) -> ModelResult:
        return max(self.models, key=lambda m: m.r)

    def to_json(self) -> Dict[str, Any]:
        return {
            "models": [m.to_json() for m in self.models],
            "r": self.r,
            "lr_statistic": self.lr_statistic,
            "p": self.p,
            "mc_se": self.p_se,
            "alpha": self.alpha,
            "reject": self.reject,
            "r_crit": None if self.r_crit is None else self.r_crit.to_json(),
            "kappa": self.kappa,
            "seed": self.seed,
        }


def run_lr_test(
    y: np.ndarray,
    design: Design,
    cs: CandidateSet,
    kappa: int = tubes.DEFAULT_KAPPA,
    alpha: float = 0.05,
    seed: int = 0,
    *,
    grid_size: int = GRID_SIZE,
    with_critical_value: bool = True,
    **mc_options: Any,
) -> LrTestReport:
    """Run the LR trend test of `cs` on the responses `y`.

    Each model gets an adjusted p-value P0(R > r_i) over the full candidate
    manifold and an unadjusted one over its own manifold. All adjusted
    p-values share one seed, so they are ordered like the r_i.

    Args:
        y: Responses in the order of `design.z_full`.
        design: The dose design.
        cs: The candidate models.
        kappa: Base Monte Carlo sample size; doubled until the standard
            error reaches `se_target` (a keyword of `mc_options`).
        alpha: The one-sided level.
        seed: The master seed.
        grid_size: Grid points per model for the sup over gamma.
        with_critical_value: Also compute r_crit at `alpha`.
        **mc_options: Passed on to the tube estimator (`se_target`,
            `max_kappa`, `threads`, `anchor_kappa`, `anchor_sampling`).
    """
    alpha = validators.level(alpha)
    y = np.asarray(y, dtype=float)
    if y.shape != (design.n,):
        msg = f"expected {design.n} responses, got shape {y.shape}"
        raise InvalidDesignError(msg)
    cs.validate(design)
    constant = bool(is_degenerate(y, design.basis))
    if constant:
        logger.info("the responses are constant; the LR statistic is 1")

    results = []
    for i, model in enumerate(cs):
        fit = fit_model(y, design, model, grid_size)
        if constant:
            adjusted = unadjusted = tubes.TubeEstimate(value=1.0, se=0.0, kappa=0, r=0.0)
        else:
            adjusted = tubes.tail_probability(
                cs, design, fit.r, kappa, rngs.sub_seed(seed, rngs.PVALUE, 0), **mc_options
            )
            unadjusted = tubes.tail_probability(
                cs.subset(i), design, fit.r, kappa, rngs.sub_seed(seed, rngs.PVALUE, 1, i), **mc_options
            )
        results.append(
            ModelResult(
                label=model.label,
                r=fit.r,
                lr_statistic=lr_statistic_from_R(fit.r, design.n),
                fit=fit,
                p_adjusted=adjusted.value,
                p_unadjusted=unadjusted.value,
                se_adjusted=adjusted.se,
                se_unadjusted=unadjusted.se,
            )
        )

    best = max(results, key=lambda m: m.r)
    r_crit = None
    if with_critical_value:
        r_crit = tubes.critical_value(
            cs, design, None, alpha, kappa=kappa, seed=rngs.sub_seed(seed, rngs.BISECTION), **mc_options
        )
    return LrTestReport(
        models=tuple(results),
        r=best.r,
        lr_statistic=lr_statistic_from_R(best.r, design.n),
        p=best.p_adjusted,
        p_se=best.se_adjusted,
        alpha=alpha,
        r_crit=r_crit,
        kappa=int(kappa),
        seed=int(seed),
    )
