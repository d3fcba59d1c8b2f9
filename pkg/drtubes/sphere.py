"""Sphere-level primitives.

Observations and model predictions are centered and scaled into points on
the unit sphere of the (n-1)-dimensional contrast space. Everything the
tests and the tube sampler need on that sphere lives here: the contrast
basis, standardization, spherical cap volumes and samplers, and the
density of the projected normal law.
"""

import dataclasses
from typing import Optional, Union

import numpy as np
from scipy import special

from drtubes import validators
from drtubes.exceptions import DegenerateShapeError, DomainError, EmptyCapError, InvalidDesignError
from drtubes.typing import FloatArray

# Relative size of Bx below which x is treated as constant.
DEGENERATE_TOLERANCE = 1e-12


@dataclasses.dataclass(frozen=True, eq=False)
class ContrastBasis:
    """Orthonormal basis B of the contrasts {a : a^T 1 = 0}.

    Attributes:
        n: The number of observations.
        rows: The (n-1, n) matrix B with B 1 = 0 and B B^T = I.
    """

    n: int
    rows: FloatArray

    @property
    def dim(self) -> int:
        """Dimension d + 1 of the space holding the unit sphere."""
        return self.n - 1

    @property
    def d(self) -> int:
        """Dimension of the unit sphere (degrees of freedom n - 2)."""
        return self.n - 2

    def apply(self, x: np.ndarray) -> FloatArray:
        """Compute B x along the last axis of `x`.

        Uses the Helmert structure, (Bx)_k = (x_1 + ... + x_k - k x_{k+1}) / sqrt(k (k + 1)),
        which costs O(n) per vector instead of O(n^2).
        """
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            msg = f"expected vectors of length {self.n}, got shape {x.shape}"
            raise InvalidDesignError(msg)
        k = np.arange(1, self.n, dtype=float)
        partial = np.cumsum(x, axis=-1)[..., :-1]
        return (partial - k * x[..., 1:]) / np.sqrt(k * (k + 1))

    def lift(self, x_tilde: np.ndarray) -> FloatArray:
        """Map contrast coordinates back to R^n with the pseudoinverse B^+ = B^T."""
        return np.asarray(x_tilde, dtype=float) @ self.rows


def build_contrast_basis(n: int) -> ContrastBasis:
    """Build the Helmert contrast basis for `n` observations.

    Row k (k = 1, ..., n-1) is (1, ..., 1, -k, 0, ..., 0) / sqrt(k (k + 1))
    with k leading ones.

    Raises:
        InvalidDesignError: n < 2.
    """
    if n is None or int(n) < 2:
        msg = f"a contrast basis needs n >= 2 observations, got n={n!r}"
        raise InvalidDesignError(msg)
    n = int(n)
    k = np.arange(1, n, dtype=float)[:, None]
    j = np.arange(n, dtype=float)[None, :]
    rows = np.where(j < k, 1.0, np.where(j == k, -k, 0.0)) / np.sqrt(k * (k + 1))
    rows.setflags(write=False)
    return ContrastBasis(n=n, rows=rows)


def standardize(x: np.ndarray, basis: ContrastBasis) -> FloatArray:
    """Return Bx / ||Bx||, the standardized version of `x` on the unit sphere.

    `x` may be a single vector or a stack of vectors along the first axes.

    Raises:
        DegenerateShapeError: x is constant, so Bx = 0.
    """
    x = np.asarray(x, dtype=float)
    bx = basis.apply(x)
    norm = np.sqrt(np.sum(bx**2, axis=-1, keepdims=True))
    scale = np.max(np.abs(x), axis=-1, keepdims=True) * np.sqrt(basis.n)
    degenerate = norm <= DEGENERATE_TOLERANCE * scale
    if np.any(degenerate) or not np.all(np.isfinite(norm)):
        msg = "cannot standardize a constant (or non-finite) vector"
        raise DegenerateShapeError(msg)
    return bx / norm


def is_degenerate(x: np.ndarray, basis: ContrastBasis) -> np.ndarray:
    """Mask of the rows of `x` that standardize() would reject."""
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        bx = basis.apply(x)
        norm = np.sqrt(np.sum(bx**2, axis=-1))
        scale = np.max(np.abs(x), axis=-1) * np.sqrt(basis.n)
    return ~np.isfinite(norm) | (norm <= DEGENERATE_TOLERANCE * scale)


def cap_volume_fraction(r: Union[float, np.ndarray], d: int) -> Union[float, FloatArray]:
    """Fraction of the d-sphere covered by a cap {t : s^T t > r}.

    For r >= 0 this is (1 - F(r^2; 1/2, d/2)) / 2 with F the beta CDF, and
    for r < 0 the complement of the cap with radius -r.

    Raises:
        DomainError: |r| > 1 or d < 1.
    """
    d = validators.integer(d, minimum=1)
    r_arr = np.asarray(r, dtype=float)
    if np.any(np.abs(r_arr) > 1):
        msg = f"cap radius r={r!r} must lie in [-1, 1]"
        raise DomainError(msg)
    upper = 0.5 * special.betaincc(0.5, d / 2, r_arr * r_arr)
    frac = np.where(r_arr >= 0, upper, 1 - upper)
    if frac.ndim == 0:
        return float(frac)
    return frac


def sample_uniform_sphere(
    d: int, rng: np.random.Generator, size: Optional[int] = None
) -> FloatArray:
    """Draw uniform points on the d-sphere in R^(d+1)."""
    d = validators.integer(d, minimum=1)
    shape = (d + 1,) if size is None else (int(size), d + 1)
    x = rng.standard_normal(shape)
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def _cap_cosines(r: float, d: int, u: np.ndarray) -> FloatArray:
    """Invert the survival function of t = w^T V at the levels u * c_r."""
    target = u * cap_volume_fraction(r, d)
    t = np.empty_like(target)
    upper = target <= 0.5
    t[upper] = np.sqrt(special.betainccinv(0.5, d / 2, 2 * target[upper]))
    t[~upper] = -np.sqrt(special.betainccinv(0.5, d / 2, 2 * (1 - target[~upper])))
    return t


def sample_uniform_cap(
    w: np.ndarray, r: float, rng: np.random.Generator
) -> FloatArray:
    """Draw one uniform point from the cap {v : w^T v > r} around each row of `w`.

    The cosine t = w^T V is drawn by inverting the regularized incomplete
    beta function, the orthogonal part uniformly on the sphere in w-perp via a
    Householder reflection of a uniform vector; the result is
    t w + sqrt(1 - t^2) u.

    Raises:
        EmptyCapError: r >= 1.
    """
    r = float(r)
    if r >= 1:
        msg = f"the cap with radius r={r!r} is empty"
        raise EmptyCapError(msg)
    r = max(r, -1.0)
    single = np.ndim(w) == 1
    w = np.atleast_2d(np.asarray(w, dtype=float))
    k, dim = w.shape
    d = dim - 1

    t = _cap_cosines(r, d, 1 - rng.random(k))
    g = rng.standard_normal((k, d))
    u = g / np.linalg.norm(g, axis=1, keepdims=True)

    # Reflect e_1 onto sign * w, choosing the sign that keeps e_1 - sign * w away from 0.
    sign = np.where(w[:, 0] > 0, -1.0, 1.0)
    y = np.empty_like(w)
    y[:, 0] = sign * t
    y[:, 1:] = np.sqrt(np.clip(1 - t * t, 0, None))[:, None] * u
    v = -sign[:, None] * w
    v[:, 0] += 1
    coef = 2 * np.sum(v * y, axis=1) / np.sum(v * v, axis=1)
    out = y - coef[:, None] * v
    return out[0] if single else out


@dataclasses.dataclass(frozen=True, eq=False)
class AngularGaussianParam:
    """Mean parameter m of the projected normal law of X / ||X||, X ~ N(m, I).

    A zero mean is the uniform law. Under a simple alternative m is
    delta times the standardized true prediction.
    """

    m: FloatArray

    def __post_init__(self) -> None:
        m = np.asarray(self.m, dtype=float)
        if m.ndim != 1 or not np.all(np.isfinite(m)):
            msg = "the angular Gaussian mean must be a finite vector"
            raise DomainError(msg)
        object.__setattr__(self, "m", m)

    @classmethod
    def uniform(cls, dim: int) -> "AngularGaussianParam":
        return cls(np.zeros(dim))

    @property
    def is_uniform(self) -> bool:
        return not np.any(self.m)

    def density(self, v: np.ndarray) -> FloatArray:
        return projected_normal_density(v, self)


def log_ip(t: np.ndarray, p: int) -> FloatArray:
    """log of I_p(t) = int_0^inf rho^(p-1) exp(-rho^2 / 2 + t rho) d rho.

    Runs the recursion I_p = (p-2) I_(p-2) + t I_(p-1) on ratios
    h_q = I_q / I_(q-1): forward from I_1 = sqrt(2 pi) e^(t^2/2) Phi(t) while
    t is not too negative, and otherwise as a backward continued fraction
    h_q = (q-1) / (|t| + h_(q+1)), where the forward recursion would cancel.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    log_i1 = 0.5 * np.log(2 * np.pi) + 0.5 * t * t + special.log_ndtr(t)
    if p == 1:
        return log_i1

    out = np.empty_like(t)
    # Forward errors grow like exp(2 |t| sqrt(p)) for t < 0; keep that below 1e4.
    fwd = t >= -4.6 / np.sqrt(p)

    tf = t[fwd]
    h = np.exp(-log_i1[fwd]) + tf
    acc = np.log(h)
    for q in range(3, p + 1):
        h = tf + (q - 2) / h
        acc += np.log(h)
    out[fwd] = log_i1[fwd] + acc

    a = -t[~fwd]
    if a.size:
        # The backward pass damps its starting error like exp(-2 |t| (sqrt(depth) - sqrt(p))).
        depth = int(np.ceil((np.sqrt(p) + 15 / a.min()) ** 2)) + 2
        h = 0.5 * (-a + np.sqrt(a * a + 4 * (depth - 1)))
        acc = np.zeros_like(a)
        for q in range(depth - 1, 1, -1):
            h = (q - 1) / (a + h)
            if q <= p:
                acc += np.log(h)
        out[~fwd] = log_i1[~fwd] + acc
    return out


def log_projected_normal_density(
    v: np.ndarray, param: AngularGaussianParam
) -> FloatArray:
    """log f(v) with respect to the uniform probability measure on the sphere."""
    v = np.atleast_2d(np.asarray(v, dtype=float))
    m = param.m
    p = m.shape[0]
    if v.shape[1] != p:
        msg = f"points of dimension {v.shape[1]} do not match a mean of dimension {p}"
        raise DomainError(msg)
    if param.is_uniform:
        return np.zeros(v.shape[0])
    const = np.log(2.0) - 0.5 * p * np.log(2.0) - special.gammaln(p / 2)
    return const - 0.5 * float(m @ m) + log_ip(v @ m, p)


def projected_normal_density(
    v: np.ndarray, param: Union[AngularGaussianParam, np.ndarray]
) -> Union[float, FloatArray]:
    """Density of the angular Gaussian law at `v` (one point or a stack of rows).

    Uses f(v) = A_p (2 pi)^(-p/2) exp(-||m||^2 / 2) I_p(v^T m) with
    A_p = 2 pi^(p/2) / Gamma(p/2), evaluated in log space.
    """
    if not isinstance(param, AngularGaussianParam):
        param = AngularGaussianParam(param)
    single = np.ndim(v) == 1
    f = np.exp(log_projected_normal_density(v, param))
    return float(f[0]) if single else f


def sample_projected_normal(
    param: AngularGaussianParam, rng: np.random.Generator, size: int
) -> FloatArray:
    """Draw standardized observations X / ||X|| with X ~ N(m, I)."""
    x = param.m + rng.standard_normal((int(size), param.m.shape[0]))
    return x / np.linalg.norm(x, axis=1, keepdims=True)
