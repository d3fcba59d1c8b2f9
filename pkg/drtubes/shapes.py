"""Dose-response shape families.

Every family maps a parameter vector gamma and a dose vector z to the
nonlinear regressor x_gamma(z) of the partially linear model
alpha + beta * x_gamma(z). Only the shape of x matters to the tests, so
families may also provide a positively rescaled and shifted version of x
that is safer to evaluate (`stable_values`).
"""

import abc
import typing
from typing import Any, Dict, Tuple, Type

import numpy as np

from drtubes import validators
from drtubes.exceptions import DomainError
from drtubes.sphere import build_contrast_basis
from drtubes.typing import FamilyName, FloatArray, GridSpacing


def _as_gamma_rows(gamma: Any, n_params: int) -> Tuple[FloatArray, bool]:
    """Return gamma as an (N, n_params) array and whether a single value was given."""
    if n_params == 0:
        if gamma is not None and np.ndim(gamma) == 2:
            return np.zeros((np.shape(gamma)[0], 0)), False
        return np.zeros((1, 0)), True
    g = np.asarray(gamma, dtype=float)
    if g.ndim == 0:
        return g.reshape(1, 1), True
    if g.ndim == 1:
        if n_params == 1:
            return g.reshape(-1, 1), False
        return g.reshape(1, n_params), True
    return g, False


class ShapeFamily(abc.ABC):
    name: FamilyName = ...
    parameter_names: Tuple[str, ...] = ()
    spacing: GridSpacing = "linear"
    # Whether x_gamma is a function of the dose alone, so that observations
    # at the same dose get the same value.
    group_constant: bool = True

    @property
    def n_params(self) -> int:
        return len(self.parameter_names)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}()"

    def validate(self, gamma: FloatArray) -> None:
        """Check an (N, n_params) array of parameters against the family domain.

        Raises:
            DomainError: A parameter lies outside the domain.
        """
        if gamma.shape[1] != self.n_params:
            msg = f"{self.name} takes {self.n_params} parameter(s), got {gamma.shape[1]}"
            raise DomainError(msg)
        if not np.all(np.isfinite(gamma)):
            msg = f"{self.name} parameters must be finite"
            raise DomainError(msg)

    @abc.abstractmethod
    def _evaluate(self, gamma: FloatArray, doses: FloatArray) -> FloatArray:
        """Evaluate the family formula for (N, n_params) gamma on n doses, giving (N, n)."""

    def _evaluate_stable(self, gamma: FloatArray, doses: FloatArray) -> FloatArray:
        return self._evaluate(gamma, doses)

    def values(self, gamma: Any, doses: np.ndarray) -> FloatArray:
        """Evaluate x_gamma(z).

        Args:
            gamma:
                A single parameter value (scalar, or a length-k vector for
                multi-parameter families) or an (N, k) array of values.
            doses:
                The dose vector z.

        Returns:
            The vector x_gamma(z), or an (N, n) array for stacked parameters.
        """
        g, single = _as_gamma_rows(gamma, self.n_params)
        self.validate(g)
        doses = np.asarray(doses, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            x = self._evaluate(g, doses)
        return x[0] if single else x

    def stable_values(self, gamma: Any, doses: np.ndarray) -> FloatArray:
        """Like `values`, up to a positive scale and a shift per row."""
        g, single = _as_gamma_rows(gamma, self.n_params)
        self.validate(g)
        doses = np.asarray(doses, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore", under="ignore"):
            x = self._evaluate_stable(g, doses)
        return x[0] if single else x

    def to_json(self) -> Dict[str, Any]:
        return {"family": self.name}


class _PositiveParameters(ShapeFamily):
    spacing: GridSpacing = "log"

    def validate(self, gamma: FloatArray) -> None:
        super().validate(gamma)
        if np.any(gamma <= 0):
            msg = f"{self.name} parameters must be positive, got {gamma[gamma <= 0][0]!r}"
            raise DomainError(msg)


class Linear(ShapeFamily):
    """x = z."""

    name = "linear"

    def _evaluate(self, gamma: FloatArray, doses: FloatArray) -> FloatArray:
        return np.broadcast_to(doses, (gamma.shape[0], doses.shape[0])).copy()


class Emax(_PositiveParameters):
    """x = z / (z + gamma), gamma > 0 (the dose giving half the maximum effect)."""

    name = "emax"
    parameter_names = ("ed50",)

    def _evaluate(self, gamma: FloatArray, doses: FloatArray) -> FloatArray:
        return doses / (doses + gamma)


class Exponential(_PositiveParameters):
    """x = exp(z / gamma) - 1, gamma > 0."""

    name = "exponential"
    parameter_names = ("delta",)

    def _evaluate(self, gamma: FloatArray, doses: FloatArray) -> FloatArray:
        return np.expm1(doses / gamma)

    def _evaluate_stable(self, gamma: FloatArray, doses: FloatArray) -> FloatArray:
        # exp((z - max z) / gamma) is a positive multiple of exp(z / gamma).
        return np.exp((doses - np.max(doses)) / gamma)


class SigmoidEmax(_PositiveParameters):
    """x = z^h / (z^h + g^h) with gamma = (g, h), g, h > 0."""

    name = "sigEmax"
    parameter_names = ("ed50", "hill")

    def _evaluate(self, gamma: FloatArray, doses: FloatArray) -> FloatArray:
        g = gamma[:, :1]
        h = gamma[:, 1:]
        return 1.0 / (1.0 + (g / doses) ** h)


class Cosine(ShapeFamily):
    """x = cos(z + gamma)."""

    name = "cosine"
    parameter_names = ("offset",)

    def _evaluate(self, gamma: FloatArray, doses: FloatArray) -> FloatArray:
        return np.cos(doses + gamma)


class PowerRatio(_PositiveParameters):
    """x = z^gamma / (z^gamma + 1.5), gamma > 0."""

    name = "powerRatio"
    parameter_names = ("power",)

    def _evaluate(self, gamma: FloatArray, doses: FloatArray) -> FloatArray:
        zg = doses**gamma
        return zg / (zg + 1.5)


class Spiral(ShapeFamily):
    """A curve that winds around the whole sphere as its frequency grows.

    The standardized prediction has spherical coordinates
    (gamma, lam * gamma, ..., lam^(d-1) * gamma); the regressor is mapped
    back to R^n with the pseudoinverse of the contrast basis. The dose
    values themselves are ignored, only their count n = d + 2 matters.
    """

    name = "spiral"
    parameter_names = ("angle",)
    group_constant = False

    def __init__(self, lam: int = 8) -> None:
        self.lam = validators.integer(lam, minimum=1)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(lam={self.lam})"

    def unit_curve(self, gamma: FloatArray, d: int) -> FloatArray:
        """Cartesian coordinates on the d-sphere for (N, 1) angles gamma."""
        phi = gamma * float(self.lam) ** np.arange(d)
        sines = np.sin(phi)
        suffix = np.ones((gamma.shape[0], d + 1))
        suffix[:, :d] = np.cumprod(sines[:, ::-1], axis=1)[:, ::-1]
        coords = suffix.copy()
        coords[:, 1:] *= np.cos(phi)
        return coords

    def _evaluate(self, gamma: FloatArray, doses: FloatArray) -> FloatArray:
        n = doses.shape[0]
        if n < 3:
            msg = f"the spiral needs at least 3 observations, got {n}"
            raise DomainError(msg)
        basis = build_contrast_basis(n)
        return basis.lift(self.unit_curve(gamma, n - 2))

    def to_json(self) -> Dict[str, Any]:
        return {"family": self.name, "lambda": self.lam}


FAMILIES: Dict[str, Type[ShapeFamily]] = {
    cls.name: cls
    for cls in (Linear, Emax, Exponential, SigmoidEmax, Cosine, PowerRatio, Spiral)
}
assert set(FAMILIES) == set(typing.get_args(FamilyName))


def make_family(name: str, **kwargs: Any) -> ShapeFamily:
    """Instantiate a shape family by its (case-insensitive) name."""
    name = validators.choice(name, FamilyName)
    return FAMILIES[name](**kwargs)
