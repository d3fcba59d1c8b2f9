"""Multiple contrast tests with model-based contrasts, as in MCP-Mod."""

import dataclasses
import logging
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from drtubes import rng as rngs
from drtubes import validators
from drtubes.exceptions import DegenerateShapeError, DomainError, InvalidDesignError
from drtubes.models import CandidateModel, Design
from drtubes.typing import FloatArray

logger = logging.getLogger(__name__)

DEFAULT_REPS = 100_000


def optimal_contrast(mu: np.ndarray, n_per_dose: np.ndarray) -> FloatArray:
    """The contrast with the most power to detect the group mean shape `mu`.

    c is proportional to n_g (mu_g - mu_bar) with mu_bar the n-weighted mean
    of mu, scaled to unit length and signed so that c^T mu > 0.

    Raises:
        DegenerateShapeError: mu is constant across the groups.
    """
    mu = np.asarray(mu, dtype=float)
    n_per_dose = np.asarray(n_per_dose, dtype=float)
    if mu.ndim != 1 or mu.shape != n_per_dose.shape or mu.shape[0] < 2:
        msg = f"need matching shape values and group sizes for >= 2 groups, got {mu.shape} and {n_per_dose.shape}"
        raise InvalidDesignError(msg)
    c = n_per_dose * (mu - np.average(mu, weights=n_per_dose))
    norm = np.linalg.norm(c)
    if not np.isfinite(norm) or norm <= 1e-12 * np.max(np.abs(mu)) * np.sqrt(mu.shape[0]):
        msg = "cannot build a contrast for a shape that is constant across dose groups"
        raise DegenerateShapeError(msg)
    c = c / norm
    return c if c @ mu > 0 else -c


@dataclasses.dataclass(frozen=True, eq=False)
class ContrastMatrix:
    """Unit-length contrasts, one column per shape.

    Attributes:
        columns: (G, M) array; every column sums to 0 and has norm 1.
        n_per_dose: The group sizes the contrasts were built for.
        labels: A name per column.
    """

    columns: FloatArray
    n_per_dose: np.ndarray
    labels: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        columns = np.asarray(self.columns, dtype=float)
        if columns.ndim == 1:
            columns = columns[:, None]
        counts = np.asarray(self.n_per_dose)
        if columns.shape[0] != counts.shape[0]:
            msg = f"contrasts have {columns.shape[0]} entries for {counts.shape[0]} groups"
            raise InvalidDesignError(msg)
        if np.any(np.abs(columns.sum(axis=0)) > 1e-10):
            msg = "every contrast must sum to 0"
            raise DomainError(msg)
        if np.any(np.abs(np.linalg.norm(columns, axis=0) - 1) > 1e-10):
            msg = "every contrast must have unit length"
            raise DomainError(msg)
        labels = tuple(self.labels) or tuple(f"contrast {i + 1}" for i in range(columns.shape[1]))
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "n_per_dose", counts)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_models(cls, models: Sequence[CandidateModel], design: Design) -> "ContrastMatrix":
        """Optimal contrasts for fixed-parameter models on the design's dose groups."""
        columns = []
        for model in models:
            if not model.is_fixed:
                msg = f"contrasts need fixed shapes, got {model.label}"
                raise DomainError(msg)
            mu = model.family.values(model.gamma[:, 0], design.doses)
            columns.append(model.signs[0] * optimal_contrast(mu, design.n_per_dose))
        return cls(np.stack(columns, axis=1), design.n_per_dose, tuple(m.label for m in models))

    @property
    def n_contrasts(self) -> int:
        return int(self.columns.shape[1])

    @property
    def scale(self) -> FloatArray:
        """sqrt(sum_g c_g^2 / n_g) per contrast."""
        return np.sqrt(np.sum(self.columns**2 / self.n_per_dose[:, None], axis=0))


@dataclasses.dataclass(frozen=True)
class ContrastTestResult:
    labels: Tuple[str, ...]
    t: FloatArray
    p_adjusted: FloatArray
    critical_value: float
    alpha: float
    reps: int

    @property
    def p(self) -> float:
        return float(np.min(self.p_adjusted))

    @property
    def reject(self) -> bool:
        return bool(np.max(self.t) > self.critical_value)

    def to_json(self) -> Dict[str, Any]:
        rows = [
            {"contrast": label, "t": float(t), "p_adjusted": float(p)}
            for label, t, p in zip(self.labels, self.t, self.p_adjusted)
        ]
        return {
            "contrasts": rows,
            "critical_value": self.critical_value,
            "alpha": self.alpha,
            "reps": self.reps,
            "mc_se": float(np.sqrt(self.p * (1 - self.p) / self.reps)),
        }


def _residual_df(design: Design) -> int:
    df = design.n - design.n_groups
    if df < 1:
        msg = "the pooled variance needs at least one group with 2 or more observations"
        raise InvalidDesignError(msg)
    return df


def _simulate_max_t(
    design: Design,
    contrasts: ContrastMatrix,
    reps: int,
    seed: int,
    purpose: int,
    mean: Optional[np.ndarray] = None,
    threads: int = 1,
) -> FloatArray:
    """Simulate max_i t_i from the sufficient statistics (group means and s^2)."""
    df = _residual_df(design)
    sd = 1 / np.sqrt(design.n_per_dose)
    mean = np.zeros(design.n_groups) if mean is None else mean
    sizes = rngs.chunk_sizes(reps)

    def chunk(c: int) -> np.ndarray:
        generator = rngs.stream(seed, purpose, c)
        means = mean + sd * generator.standard_normal((sizes[c], design.n_groups))
        s = np.sqrt(generator.chisquare(df, sizes[c]) / df)
        return np.max(means @ contrasts.columns / contrasts.scale, axis=1) / s

    return rngs.concat(rngs.map_chunks(chunk, len(sizes), threads))


def max_t_contrast_test(
    y: np.ndarray,
    design: Design,
    contrasts: ContrastMatrix,
    alpha: float = 0.025,
    reps: int = DEFAULT_REPS,
    seed: int = 0,
    threads: int = 1,
) -> ContrastTestResult:
    """Multiple contrast test with max-t adjusted p-values.

    t_i = c_i^T ybar / (s sqrt(sum_g c_ig^2 / n_g)) with the pooled
    standard deviation s on n - G degrees of freedom. The null distribution
    of max_i t_i is simulated.
    """
    alpha = validators.level(alpha)
    reps = validators.integer(reps, minimum=100)
    y = np.asarray(y, dtype=float)
    if y.shape != (design.n,):
        msg = f"expected {design.n} responses, got shape {y.shape}"
        raise InvalidDesignError(msg)
    if not np.array_equal(contrasts.n_per_dose, design.n_per_dose):
        msg = "the contrasts were built for different group sizes"
        raise InvalidDesignError(msg)
    df = _residual_df(design)
    means = design.group_means(y)
    resid = y - means[design.group_index]
    s = np.sqrt(resid @ resid / df)
    if s == 0:
        msg = "the responses have no variation within dose groups"
        raise DegenerateShapeError(msg)
    t = (means @ contrasts.columns) / (s * contrasts.scale)

    null = _simulate_max_t(design, contrasts, reps, seed, rngs.NULL_SIMULATION, threads=threads)
    p_adjusted = np.mean(null[:, None] >= t[None, :], axis=0)
    critical = float(np.quantile(null, 1 - alpha))
    logger.debug("max-t critical value %.4f from %d null draws", critical, reps)
    return ContrastTestResult(contrasts.labels, t, p_adjusted, critical, alpha, reps)


def contrast_power(
    design: Design,
    contrasts: ContrastMatrix,
    group_mean: np.ndarray,
    alpha: float = 0.05,
    reps: int = DEFAULT_REPS,
    seed: int = 0,
    threads: int = 1,
) -> Tuple[float, float]:
    """Power of the max-t test when the dose groups have means `group_mean` (in units of sigma).

    Returns:
        The simulated power and its standard error.
    """
    alpha = validators.level(alpha)
    null = _simulate_max_t(design, contrasts, reps, seed, rngs.NULL_SIMULATION, threads=threads)
    critical = np.quantile(null, 1 - alpha)
    alt = _simulate_max_t(
        design, contrasts, reps, seed, rngs.ALTERNATIVE_SIMULATION, np.asarray(group_mean, dtype=float), threads
    )
    rate = float(np.mean(alt > critical))
    return rate, float(np.sqrt(rate * (1 - rate) / reps))
