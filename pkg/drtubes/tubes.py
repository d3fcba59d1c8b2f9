"""Monte Carlo volumes of tubular neighborhoods of the model manifold.

Under the null hypothesis the standardized observation is uniform on the
sphere, and the event R > r is the event that it falls into the union of
the caps of radius r around every standardized prediction, the tube T_r.
The estimator draws anchors W_k on the manifold, a uniform point V_k in the
cap around each of them, and weights each V_k by the number m_k of anchors
whose cap also contains it::

    P(R > r) ~ c_r * sum_k f(V_k) / m_k

with c_r the cap volume fraction and f the density of the observation on
the sphere (f = 1 under the null).
"""

import dataclasses
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import optimize, special, stats

from drtubes import rng as rngs
from drtubes import validators
from drtubes.exceptions import DomainError, NonBracketingError, SampleSizeLimitError
from drtubes.models import CandidateSet, Design, Provenance, sample_model_point
from drtubes.shapes import ShapeFamily
from drtubes.sphere import (
    AngularGaussianParam,
    ContrastBasis,
    cap_volume_fraction,
    sample_projected_normal,
    sample_uniform_cap,
    standardize,
)
from drtubes.typing import AnchorSampling, FloatArray, SphereDensity

logger = logging.getLogger(__name__)

DEFAULT_KAPPA = 20_000
DEFAULT_MAX_KAPPA = 1_000_000
DEFAULT_SE_TARGET = 1e-3
DEFAULT_ANCHOR_KAPPA = 20_000
MIN_KAPPA = 100

# Largest anchor-by-sample block of inner products held in memory at once.
BLOCK_ELEMENTS = 4_000_000


@dataclasses.dataclass(frozen=True, eq=False)
class TubeSampleBatch:
    """Pairs (W_k, V_k) with V_k uniform in the cap of radius r around W_k.

    Attributes:
        r: The cap radius.
        anchors: (kappa, d+1) points W on the manifold.
        samples: (kappa, d+1) points V in the tube.
        counts: m_k, the (possibly rescaled) number of anchors whose cap
            contains V_k; always at least 1.
        provenance: Model index, sign and parameter of each anchor.
    """

    r: float
    anchors: FloatArray
    samples: FloatArray
    counts: FloatArray
    provenance: Provenance

    @property
    def kappa(self) -> int:
        return int(self.samples.shape[0])


@dataclasses.dataclass(frozen=True)
class TubeEstimate:
    """A Monte Carlo estimate of an integral over the tube.

    Attributes:
        value: The estimate.
        se: Its Monte Carlo standard error.
        kappa: The number of samples used.
        r: The tube radius.
        small_kappa: Set when kappa was below the recommended minimum.
        replicates: Per-seed values when the estimate comes from replicates.
    """

    value: float
    se: float
    kappa: int
    r: float
    small_kappa: bool = False
    replicates: Tuple[float, ...] = ()

    def __float__(self) -> float:
        return self.value

    def to_json(self) -> Dict[str, Any]:
        out = {"value": self.value, "mc_se": self.se, "kappa": self.kappa, "r": self.r}
        if self.replicates:
            out["replicates"] = list(self.replicates)
        return out


@dataclasses.dataclass(frozen=True, eq=False)
class Alternative:
    """A simple alternative: the true shape and the non-centrality delta.

    delta = beta * ||B x_gamma|| / sigma. The standardized observation then
    follows the angular Gaussian law with mean delta * x~_true.
    """

    family: ShapeFamily
    gamma: Any = None
    delta: float = 0.0

    def __post_init__(self) -> None:
        delta = float(self.delta)
        if not np.isfinite(delta) or delta < 0:
            msg = f"the non-centrality delta={self.delta!r} must be finite and >= 0"
            raise DomainError(msg)
        object.__setattr__(self, "delta", delta)

    @classmethod
    def from_effect(
        cls, family: ShapeFamily, gamma: Any, design: Design, effect_size: float
    ) -> "Alternative":
        """Build the alternative with beta / sigma = `effect_size` on `design`."""
        effect_size = validators.positive(effect_size, name="effect_size")
        x = family.values(gamma, design.z_full)
        delta = effect_size * float(np.linalg.norm(design.basis.apply(x)))
        return cls(family, gamma, delta)

    def unit_prediction(self, design: Design) -> FloatArray:
        return standardize(self.family.stable_values(self.gamma, design.z_full), design.basis)

    def mean_param(self, design: Design) -> AngularGaussianParam:
        if self.delta == 0:
            return AngularGaussianParam.uniform(design.n - 1)
        return AngularGaussianParam(self.delta * self.unit_prediction(design))

    def local_power(self, x_test: np.ndarray, design: Design, alpha: float = 0.05) -> float:
        """`local_t_power` of the test direction `x_test` under this alternative on `design`."""
        return local_t_power(x_test, self.mean_param(design), design.d, alpha)

    def to_json(self) -> Dict[str, Any]:
        out = self.family.to_json()
        if self.family.n_params:
            out["gamma"] = np.asarray(self.gamma, dtype=float).tolist()
        out["delta"] = self.delta
        return out


@dataclasses.dataclass(frozen=True)
class CriticalValue:
    """A critical value r_crit with P0(R > r_crit) = alpha."""

    r: float
    alpha: float
    se: float
    kappa: int
    evaluations: int
    exact: bool

    def __float__(self) -> float:
        return self.r

    def to_json(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


def _check_basis(design: Design, basis: Optional[ContrastBasis]) -> None:
    if basis is not None and basis.n != design.n:
        msg = f"basis for n={basis.n} does not match the design with n={design.n}"
        raise DomainError(msg)


def count_neighbors(
    anchors: np.ndarray,
    samples: np.ndarray,
    r: float,
    anchor_kappa: Optional[int] = None,
    span: Optional[np.ndarray] = None,
    threads: int = 1,
) -> FloatArray:
    """Count for every sample V_k the anchors W_j with W_j^T V_k >= r.

    Sample k's own anchor always counts. With `anchor_kappa` < kappa only
    the first `anchor_kappa` anchors are compared and the counts of the
    other anchors are scaled up. With `span`, inner products are taken on
    the coordinates of the orthonormal columns of `span`, which must contain
    every anchor.
    """
    kappa = samples.shape[0]
    kw = kappa if anchor_kappa is None else min(validators.integer(anchor_kappa, minimum=2), kappa)
    w = anchors[:kw]
    v = samples
    if span is not None:
        w = w @ span
        v = v @ span
    rows = max(1, BLOCK_ELEMENTS // kw)
    n_blocks = -(-kappa // rows)

    def block(i: int) -> Tuple[np.ndarray, np.ndarray]:
        start, stop = i * rows, min((i + 1) * rows, kappa)
        hits = v[start:stop] @ w.T >= r
        own = np.arange(start, stop)
        self_hit = np.zeros(stop - start, dtype=bool)
        inside = own < kw
        self_hit[inside] = hits[np.flatnonzero(inside), own[inside]]
        return hits.sum(axis=1), self_hit

    parts = rngs.map_chunks(block, n_blocks, threads)
    count = np.concatenate([p[0] for p in parts]).astype(float)
    self_hit = np.concatenate([p[1] for p in parts])
    if kw == kappa:
        return 1.0 + count - self_hit
    inside = np.arange(kappa) < kw
    scaled_inside = 1.0 + (kappa - 1) / (kw - 1) * (count - self_hit)
    scaled_outside = 1.0 + (kappa - 1) / kw * count
    return np.where(inside, scaled_inside, scaled_outside)


def draw_tube_sample(
    cs: CandidateSet,
    design: Design,
    basis: Optional[ContrastBasis],
    r: float,
    kappa: int,
    seed: int,
    *,
    threads: int = 1,
    anchor_kappa: Optional[int] = None,
    anchor_sampling: AnchorSampling = "uniform",
) -> TubeSampleBatch:
    """Draw kappa pairs (W_k, V_k) and their anchor counts m_k."""
    _check_basis(design, basis)

    def chunk(c: int) -> Tuple[np.ndarray, np.ndarray, Provenance]:
        size = sizes[c]
        generator = rngs.stream(seed, rngs.TUBE_SAMPLE, c)
        w, prov = sample_model_point(cs, design, None, generator, size, anchor_sampling)
        return w, sample_uniform_cap(w, r, generator), prov

    sizes = rngs.chunk_sizes(kappa)
    parts = rngs.map_chunks(chunk, len(sizes), threads)
    anchors = rngs.concat([p[0] for p in parts])
    samples = rngs.concat([p[1] for p in parts])
    provenance = Provenance(
        model_index=rngs.concat([p[2].model_index for p in parts]),
        sign=rngs.concat([p[2].sign for p in parts]),
        gamma=rngs.concat([p[2].gamma for p in parts]),
    )
    span = design.span_basis if cs.group_constant else None
    counts = count_neighbors(anchors, samples, r, anchor_kappa, span, threads)
    return TubeSampleBatch(r=r, anchors=anchors, samples=samples, counts=counts, provenance=provenance)


def _radius(r: float) -> float:
    r = validators.correlation(r)
    if abs(r) == 1:
        msg = f"the tube radius must lie in (-1, 1), got {r!r}"
        raise DomainError(msg)
    return r


def estimate_tube_integral(
    cs: CandidateSet,
    design: Design,
    basis: Optional[ContrastBasis],
    r: float,
    f: Optional[SphereDensity] = None,
    kappa: int = DEFAULT_KAPPA,
    seed: int = 0,
    *,
    threads: int = 1,
    anchor_kappa: Optional[int] = None,
    anchor_sampling: AnchorSampling = "uniform",
) -> TubeEstimate:
    """Estimate the integral of `f` over the tube T_r of the candidate manifold.

    Args:
        cs: The candidate set spanning the manifold.
        design: The dose design.
        basis: The contrast basis, or None for the design's own.
        r: The tube radius in (-1, 1).
        f: A density on the sphere taking (k, d+1) rows; None for f = 1,
            which gives the null probability P0(R > r).
        kappa: The number of (anchor, cap sample) pairs.
        seed: The master seed.
        threads: Worker threads; the result does not depend on it.
        anchor_kappa: Compare every sample against only this many anchors.
        anchor_sampling: How anchor parameters are drawn on each model.

    Returns:
        c_r * sum_k f(V_k) / m_k with its naive standard error.
    """
    r = _radius(r)
    kappa = validators.integer(kappa, minimum=1)
    small = kappa < MIN_KAPPA
    if small:
        logger.warning("kappa=%d is below the recommended minimum of %d", kappa, MIN_KAPPA)
    c_r = cap_volume_fraction(r, design.d)

    if cs.is_point:
        # Every cap sample lies in the single cap, so m_k = kappa.
        if f is None:
            return TubeEstimate(value=c_r, se=0.0, kappa=kappa, r=r, small_kappa=small)
        batch = draw_tube_sample(cs, design, basis, r, kappa, seed, threads=threads)
        weights = f(batch.samples)
        value = c_r * float(np.mean(weights))
        se = c_r * float(np.std(weights, ddof=1)) / np.sqrt(kappa) if kappa > 1 else np.inf
        return TubeEstimate(value=value, se=se, kappa=kappa, r=r, small_kappa=small)

    batch = draw_tube_sample(
        cs,
        design,
        basis,
        r,
        kappa,
        seed,
        threads=threads,
        anchor_kappa=anchor_kappa,
        anchor_sampling=anchor_sampling,
    )
    weights = 1.0 / batch.counts if f is None else f(batch.samples) / batch.counts
    value = c_r * float(np.sum(weights))
    se = c_r * float(np.std(weights * kappa, ddof=1)) / np.sqrt(kappa) if kappa > 1 else np.inf
    logger.debug("tube integral r=%.5f kappa=%d value=%.6f se=%.2e", r, kappa, value, se)
    return TubeEstimate(value=value, se=se, kappa=kappa, r=r, small_kappa=small)


def estimate_tube_probability(
    cs: CandidateSet,
    design: Design,
    basis: Optional[ContrastBasis],
    r: float,
    f: Optional[SphereDensity] = None,
    kappa: int = DEFAULT_KAPPA,
    seed: int = 0,
    *,
    se_target: float = DEFAULT_SE_TARGET,
    max_kappa: int = DEFAULT_MAX_KAPPA,
    threads: int = 1,
    anchor_kappa: Optional[int] = None,
    anchor_sampling: AnchorSampling = "uniform",
) -> TubeEstimate:
    """Like `estimate_tube_integral`, doubling kappa until se <= se_target or kappa = max_kappa."""
    k = min(validators.integer(kappa, minimum=1), validators.integer(max_kappa, minimum=1))
    while True:
        est = estimate_tube_integral(
            cs,
            design,
            basis,
            r,
            f,
            k,
            seed,
            threads=threads,
            anchor_kappa=anchor_kappa,
            anchor_sampling=anchor_sampling,
        )
        if est.se <= se_target or k >= max_kappa:
            if est.se > se_target:
                logger.warning(
                    "stopped at max_kappa=%d with se=%.2e above the target %.2e", k, est.se, se_target
                )
            return est
        k = min(2 * k, max_kappa)


def replicate_tube_integral(
    cs: CandidateSet,
    design: Design,
    basis: Optional[ContrastBasis],
    r: float,
    f: Optional[SphereDensity] = None,
    kappa: int = DEFAULT_KAPPA,
    seed: int = 0,
    replicates: int = 10,
    **kwargs: Any,
) -> TubeEstimate:
    """Average independent estimates; the standard error comes from their spread."""
    replicates = validators.integer(replicates, minimum=2)
    values = [
        estimate_tube_integral(
            cs, design, basis, r, f, kappa, rngs.sub_seed(seed, rngs.REPLICATE, i), **kwargs
        ).value
        for i in range(replicates)
    ]
    return TubeEstimate(
        value=float(np.mean(values)),
        se=float(np.std(values, ddof=1)) / np.sqrt(replicates),
        kappa=int(kappa),
        r=float(r),
        small_kappa=kappa < MIN_KAPPA,
        replicates=tuple(values),
    )


def tail_probability(
    cs: CandidateSet,
    design: Design,
    r: float,
    kappa: int = DEFAULT_KAPPA,
    seed: int = 0,
    **kwargs: Any,
) -> TubeEstimate:
    """P0(R > r) for observed correlations r anywhere in [-1, 1]."""
    r = validators.correlation(r)
    if r >= 1:
        return TubeEstimate(value=0.0, se=0.0, kappa=0, r=r)
    if r <= -1:
        return TubeEstimate(value=1.0, se=0.0, kappa=0, r=r)
    if cs.is_point:
        return TubeEstimate(value=cap_volume_fraction(r, design.d), se=0.0, kappa=0, r=r)
    est = estimate_tube_probability(cs, design, None, r, None, kappa, seed, **kwargs)
    return dataclasses.replace(est, value=min(est.value, 1.0))


def critical_value(
    cs: CandidateSet,
    design: Design,
    basis: Optional[ContrastBasis] = None,
    alpha: float = 0.05,
    tol: float = 1e-3,
    kappa: int = DEFAULT_KAPPA,
    seed: int = 0,
    *,
    se_target: float = DEFAULT_SE_TARGET,
    max_kappa: int = DEFAULT_MAX_KAPPA,
    threads: int = 1,
    anchor_kappa: Optional[int] = DEFAULT_ANCHOR_KAPPA,
    anchor_sampling: AnchorSampling = "uniform",
    max_iterations: int = 60,
    max_doublings: int = 2,
) -> CriticalValue:
    """Find r_crit with P0(R > r_crit) = alpha by bisection on [0, 1).

    A single-point manifold is solved exactly by inverting the cap volume.
    Otherwise each evaluation uses its own seed. When an estimate cannot be
    told apart from alpha (|p - alpha| <= 2 se) kappa is doubled before a
    bound moves, but only while se > se_target and kappa < max_kappa, and at
    most `max_doublings` times per evaluation. An estimate that already meets
    se_target decides the bisection step as is.

    Raises:
        NonBracketingError: P0(R > 0) < alpha, i.e. the critical value would
            be negative.
    """
    alpha = validators.level(alpha)
    se_target = validators.positive(se_target, name="se_target")
    max_doublings = validators.integer(max_doublings, minimum=0)
    _check_basis(design, basis)
    if cs.is_point:
        r = float(np.sqrt(special.betainccinv(0.5, design.d / 2, 2 * alpha)))
        return CriticalValue(r=r, alpha=alpha, se=0.0, kappa=0, evaluations=0, exact=True)

    options = {"threads": threads, "anchor_kappa": anchor_kappa, "anchor_sampling": anchor_sampling}
    evaluations = 0

    def evaluate(r: float) -> TubeEstimate:
        nonlocal evaluations
        k = kappa
        for _ in range(max_doublings + 1):
            est = estimate_tube_integral(
                cs, design, None, r, None, k, rngs.sub_seed(seed, rngs.BISECTION, evaluations), **options
            )
            evaluations += 1
            if est.se <= se_target or abs(est.value - alpha) > 2 * est.se or k >= max_kappa:
                break
            k = min(2 * k, max_kappa)
        return est

    at_zero = evaluate(0.0)
    if at_zero.value < alpha:
        msg = (
            f"P0(R > 0) = {at_zero.value:.4f} is below alpha={alpha}; negative critical values "
            "are not supported, use a smaller alpha"
        )
        raise NonBracketingError(msg)

    lo, hi = 0.0, 1.0
    for _ in range(max_iterations):
        mid = 0.5 * (lo + hi)
        est = evaluate(mid)
        logger.debug("bisection [%.5f, %.5f] r=%.5f p=%.5f se=%.2e", lo, hi, mid, est.value, est.se)
        if est.value > alpha:
            lo = mid
        else:
            hi = mid
        close = abs(est.value - alpha) <= max(2 * est.se, 5e-4)
        if hi - lo <= tol and (close or est.se <= se_target):
            break
    else:
        logger.warning("critical value search stopped after %d iterations", max_iterations)
    return CriticalValue(
        r=0.5 * (lo + hi),
        alpha=alpha,
        se=est.se,
        kappa=est.kappa,
        evaluations=evaluations,
        exact=False,
    )


def power(
    cs: CandidateSet,
    design: Design,
    basis: Optional[ContrastBasis],
    r_crit: float,
    alt: Alternative,
    kappa: int = DEFAULT_KAPPA,
    seed: int = 0,
    **kwargs: Any,
) -> TubeEstimate:
    """P1(R > r_crit) under the angular Gaussian law of the alternative."""
    r_crit = float(r_crit)
    if not 0 < r_crit < 1:
        msg = f"r_crit={r_crit!r} must lie in (0, 1)"
        raise DomainError(msg)
    param = alt.mean_param(design)
    f = None if param.is_uniform else param.density
    return estimate_tube_integral(cs, design, basis, r_crit, f, kappa, seed, **kwargs)


def local_t_power(x_test: np.ndarray, alt: AngularGaussianParam, d: int, alpha: float = 0.05) -> float:
    """Power of the one-sided t-test built on the regressor direction `x_test`.

    Args:
        x_test: The standardized test direction.
        alt: The angular Gaussian law of the alternative, with mean
            m = delta * x~_true (see `Alternative.mean_param`).
        d: Residual degrees of freedom.
        alpha: The one-sided level.

    Returns:
        P(T > t_{1-alpha,d}) for T noncentral t with d degrees of freedom and
        non-centrality x_test^T m.
    """
    alpha = validators.level(alpha)
    d = validators.integer(d, minimum=1)
    x_test = validators.unit_rows(x_test)[0]
    if x_test.shape != alt.m.shape:
        msg = f"the test direction has {x_test.shape[0]} coordinates, the alternative {alt.m.shape[0]}"
        raise DomainError(msg)
    t_crit = stats.t.ppf(1 - alpha, d)
    return float(stats.nct.sf(t_crit, d, float(x_test @ alt.m)))


def solve_delta(
    family: ShapeFamily,
    gamma: Any,
    design: Design,
    basis: Optional[ContrastBasis] = None,
    target_power: float = 0.8,
    alpha: float = 0.05,
) -> float:
    """Non-centrality at which the locally optimal test for (family, gamma) has `target_power`."""
    alpha = validators.level(alpha)
    target_power = float(target_power)
    if not alpha <= target_power < 1:
        msg = f"target_power={target_power!r} must lie in [alpha, 1)"
        raise DomainError(msg)
    _check_basis(design, basis)
    # The shape must be non-degenerate on the design even though delta only depends on d.
    standardize(family.stable_values(gamma, design.z_full), design.basis)
    if target_power == alpha:
        return 0.0
    d = design.d
    t_crit = stats.t.ppf(1 - alpha, d)

    def excess(delta: float) -> float:
        return float(stats.nct.sf(t_crit, d, delta)) - target_power

    hi = 1.0
    while excess(hi) < 0:
        hi *= 2
    return float(optimize.brentq(excess, 0.0, hi, xtol=1e-12, rtol=1e-14))


@dataclasses.dataclass(frozen=True)
class SampleSizeResult:
    """The smallest per-arm multiplier reaching the target power."""

    n_per_arm: int
    n_total: int
    power: TubeEstimate
    r_crit: float

    def to_json(self) -> Dict[str, Any]:
        return {
            "n_per_arm": self.n_per_arm,
            "n_total": self.n_total,
            "power": self.power.to_json(),
            "r_crit": self.r_crit,
        }


def sample_size(
    cs: CandidateSet,
    doses: np.ndarray,
    allocation: np.ndarray,
    family: ShapeFamily,
    gamma: Any,
    effect_size: float,
    target_power: float = 0.8,
    alpha: float = 0.05,
    kappa: int = DEFAULT_KAPPA,
    seed: int = 0,
    *,
    n_min: int = 2,
    n_max: int = 1000,
    tol: float = 1e-3,
    power_tol: Optional[float] = None,
    **kwargs: Any,
) -> SampleSizeResult:
    """Smallest n such that the design with n * allocation per dose reaches `target_power`.

    The search doubles n from `n_min` until the power estimate reaches the
    target and then bisects; every n gets its own critical value and power
    estimate from a seed derived from n. An estimate counts as reaching the
    target when it is at least `target_power - power_tol`; `power_tol`
    defaults to twice the estimate's Monte Carlo standard error, so the
    returned power may fall that far short of the target.

    Raises:
        SampleSizeLimitError: Even n_max falls short of the target.
    """
    effect_size = validators.positive(effect_size, name="effect_size")
    alpha = validators.level(alpha)
    n_min = validators.integer(n_min, minimum=1)
    n_max = validators.integer(n_max, minimum=n_min)
    if power_tol is not None and not 0 <= float(power_tol) < 1:
        msg = f"power_tol={power_tol!r} must lie in [0, 1)"
        raise DomainError(msg)
    allocation = np.asarray(allocation, dtype=np.int64)
    cache: Dict[int, SampleSizeResult] = {}

    def evaluate(n: int) -> SampleSizeResult:
        if n not in cache:
            design = Design(doses, n * allocation)
            crit = critical_value(
                cs, design, None, alpha, tol, kappa, rngs.sub_seed(seed, rngs.SAMPLE_SIZE, n, 0), **kwargs
            )
            alt = Alternative.from_effect(family, gamma, design, effect_size)
            est = power(cs, design, None, crit.r, alt, kappa, rngs.sub_seed(seed, rngs.SAMPLE_SIZE, n, 1), **kwargs)
            logger.info("n=%d r_crit=%.4f power=%.4f (se %.4f)", n, crit.r, est.value, est.se)
            cache[n] = SampleSizeResult(n, design.n, est, crit.r)
        return cache[n]

    def reached(n: int) -> bool:
        est = evaluate(n).power
        return est.value >= target_power - (2 * est.se if power_tol is None else power_tol)

    if target_power <= alpha or reached(n_min):
        return evaluate(n_min)

    lo, hi = n_min, n_min
    while not reached(hi):
        lo = hi
        if hi >= n_max:
            msg = f"power {evaluate(hi).power.value:.3f} at n_max={n_max} is below the target {target_power}"
            raise SampleSizeLimitError(msg)
        hi = min(2 * hi, n_max)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if reached(mid):
            hi = mid
        else:
            lo = mid
    return evaluate(hi)


def chi2_radius(q: float, n: int) -> float:
    """The correlation r at which -2 log S(r) = n * -log(1 - r^2) equals q."""
    q = validators.positive(q, name="q")
    n = validators.integer(n, minimum=1)
    return float(np.sqrt(-np.expm1(-q / n)))


def _dense_predictions(cs: CandidateSet, design: Design, grid_size: int) -> FloatArray:
    parts = []
    for i, sign in cs.branches:
        model = cs.models[i]
        parts.append(sign * model.standardized(model.grid(grid_size), design))
    return np.concatenate(parts, axis=0)


def simulate_rejection_rate(
    cs: CandidateSet,
    design: Design,
    basis: Optional[ContrastBasis],
    r_crit: float,
    alt: Optional[Alternative] = None,
    reps: int = 20_000,
    seed: int = 0,
    *,
    grid_size: int = 2048,
    threads: int = 1,
) -> TubeEstimate:
    """Rejection rate of R > r_crit by brute force.

    Simulates standardized observations and takes R as the maximum
    correlation over a dense grid of standardized predictions.
    """
    _check_basis(design, basis)
    reps = validators.integer(reps, minimum=2)
    param = AngularGaussianParam.uniform(design.n - 1) if alt is None else alt.mean_param(design)
    predictions = _dense_predictions(cs, design, grid_size)
    span = design.span_basis if cs.group_constant else None
    if span is not None:
        predictions = predictions @ span
    sizes = rngs.chunk_sizes(reps)

    def chunk(c: int) -> np.ndarray:
        y = sample_projected_normal(param, rngs.stream(seed, rngs.ALTERNATIVE_SIMULATION, c), sizes[c])
        if span is not None:
            y = y @ span
        return np.max(y @ predictions.T, axis=1) > r_crit

    rejected = rngs.concat(rngs.map_chunks(chunk, len(sizes), threads))
    rate = float(np.mean(rejected))
    return TubeEstimate(value=rate, se=float(np.sqrt(rate * (1 - rate) / reps)), kappa=reps, r=float(r_crit))
