"""Designs, candidate models and the model manifold on the sphere."""

import dataclasses
import functools
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from drtubes import validators
from drtubes.exceptions import DegenerateShapeError, DomainError, InvalidDesignError
from drtubes.shapes import ShapeFamily
from drtubes.sphere import ContrastBasis, build_contrast_basis, is_degenerate, standardize
from drtubes.typing import AnchorSampling, Direction, FloatArray, IntArray

ARC_RESOLUTION = 4096


@dataclasses.dataclass(frozen=True, eq=False)
class Design:
    """Dose levels and the number of observations at each of them.

    Attributes:
        doses: Strictly ascending dose levels z.
        n_per_dose: The number of observations at each dose.
    """

    doses: FloatArray
    n_per_dose: IntArray

    def __post_init__(self) -> None:
        doses = np.asarray(self.doses, dtype=float).ravel()
        counts = np.asarray(self.n_per_dose).ravel()
        if counts.shape == (1,) and doses.shape[0] > 1:
            counts = np.repeat(counts, doses.shape[0])
        if doses.shape != counts.shape:
            msg = f"{doses.shape[0]} doses but {counts.shape[0]} group sizes"
            raise InvalidDesignError(msg)
        if doses.shape[0] < 2:
            msg = f"a design needs at least 2 distinct doses, got {doses.shape[0]}"
            raise InvalidDesignError(msg)
        if not np.all(np.isfinite(doses)) or np.any(np.diff(doses) <= 0):
            msg = f"doses must be finite and strictly ascending, got {doses.tolist()!r}"
            raise InvalidDesignError(msg)
        if np.any(counts != np.round(counts)) or np.any(counts < 1):
            msg = f"group sizes must be positive integers, got {counts.tolist()!r}"
            raise InvalidDesignError(msg)
        counts = counts.astype(np.int64)
        if counts.sum() < 3:
            msg = f"a design needs at least 3 observations, got {counts.sum()}"
            raise InvalidDesignError(msg)
        doses.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "doses", doses)
        object.__setattr__(self, "n_per_dose", counts)

    @classmethod
    def balanced(cls, doses: Any, n_per_dose: int) -> "Design":
        doses = np.asarray(doses, dtype=float)
        return cls(doses, np.full(doses.shape[0], int(n_per_dose)))

    def __repr__(self) -> str:
        return f"Design(doses={self.doses.tolist()}, n_per_dose={self.n_per_dose.tolist()})"

    @property
    def n(self) -> int:
        return int(self.n_per_dose.sum())

    @property
    def d(self) -> int:
        return self.n - 2

    @property
    def n_groups(self) -> int:
        return int(self.doses.shape[0])

    @functools.cached_property
    def z_full(self) -> FloatArray:
        """The dose of every observation, in group order."""
        return np.repeat(self.doses, self.n_per_dose)

    @functools.cached_property
    def group_index(self) -> IntArray:
        return np.repeat(np.arange(self.n_groups), self.n_per_dose)

    @functools.cached_property
    def basis(self) -> ContrastBasis:
        return build_contrast_basis(self.n)

    @functools.cached_property
    def span_basis(self) -> FloatArray:
        """Orthonormal columns spanning B x for every x that is constant within dose groups."""
        indicators = np.eye(self.n_groups)[self.group_index].T
        projected = self.basis.apply(indicators).T
        u, s, _ = np.linalg.svd(projected, full_matrices=False)
        rank = int(np.sum(s > 1e-10 * s[0]))
        return u[:, :rank]

    def group_means(self, y: np.ndarray) -> FloatArray:
        y = np.asarray(y, dtype=float)
        return np.bincount(self.group_index, weights=y, minlength=self.n_groups) / self.n_per_dose

    def to_json(self) -> Dict[str, Any]:
        return {"doses": self.doses.tolist(), "n_per_dose": self.n_per_dose.tolist()}


def group_observations(dose: np.ndarray, response: np.ndarray) -> Tuple[Design, FloatArray]:
    """Build the design of raw (dose, response) observations.

    Returns:
        The design and the responses reordered to match `Design.z_full`.
    """
    dose = np.asarray(dose, dtype=float).ravel()
    response = np.asarray(response, dtype=float).ravel()
    if dose.shape != response.shape:
        msg = f"{dose.shape[0]} doses but {response.shape[0]} responses"
        raise InvalidDesignError(msg)
    order = np.argsort(dose, kind="stable")
    levels, counts = np.unique(dose[order], return_counts=True)
    return Design(levels, counts), response[order]


def _as_box(gamma: Any, n_params: int) -> FloatArray:
    if n_params == 0:
        if gamma is not None and np.size(gamma) != 0:
            msg = f"this family takes no parameters, got {gamma!r}"
            raise DomainError(msg)
        return np.zeros((0, 2))
    box = np.asarray(gamma, dtype=float)
    if box.ndim == 0:
        box = np.array([[box, box]])
    elif box.ndim == 1 and n_params == 1 and box.shape[0] == 2:
        box = box.reshape(1, 2)
    elif box.ndim == 1 and box.shape[0] == n_params:
        box = np.stack([box, box], axis=1)
    if box.shape != (n_params, 2):
        msg = f"expected {n_params} (lo, hi) pair(s), got {gamma!r}"
        raise DomainError(msg)
    return box


@dataclasses.dataclass(frozen=True, eq=False)
class CandidateModel:
    """One candidate shape family with its parameter box and trend direction.

    Attributes:
        family: The shape family.
        gamma: The (k, 2) box of closed parameter intervals. A scalar or a
            length-k vector fixes the parameters.
        direction: "increasing" tests beta > 0, "decreasing" beta < 0 and
            "both" exposes both signs as two branches of the manifold.
    """

    family: ShapeFamily
    gamma: FloatArray = None
    direction: Direction = "increasing"

    def __post_init__(self) -> None:
        box = _as_box(self.gamma, self.family.n_params)
        if np.any(box[:, 0] > box[:, 1]):
            msg = f"empty parameter interval {box.tolist()!r} for {self.family.name}"
            raise DomainError(msg)
        if self.family.n_params:
            self.family.validate(box.T.copy())
        box.setflags(write=False)
        object.__setattr__(self, "gamma", box)
        object.__setattr__(self, "direction", validators.choice(self.direction, Direction))

    @property
    def signs(self) -> Tuple[int, ...]:
        return {"increasing": (1,), "decreasing": (-1,), "both": (1, -1)}[self.direction]

    @property
    def is_fixed(self) -> bool:
        return bool(np.all(self.gamma[:, 0] == self.gamma[:, 1]))

    @property
    def label(self) -> str:
        if self.family.n_params == 0:
            return self.family.name
        if self.is_fixed:
            return f"{self.family.name}({', '.join(f'{g:g}' for g in self.gamma[:, 0])})"
        return f"{self.family.name}{self.gamma.tolist()}"

    def sample_gamma(self, rng: np.random.Generator, size: int) -> FloatArray:
        """Uniform draws from the parameter box, shape (size, k)."""
        lo, hi = self.gamma[:, 0], self.gamma[:, 1]
        return lo + (hi - lo) * rng.random((int(size), lo.shape[0]))

    def grid(self, size: int = 512) -> FloatArray:
        """A deterministic grid over the box, shape (N, k).

        One-parameter boxes use `size` points, log-spaced for scale
        parameters and linear otherwise; two-parameter boxes use a
        ceil(sqrt(size)) square grid.
        """
        k = self.family.n_params
        if k == 0 or self.is_fixed:
            return self.gamma[:, 0].reshape(1, k)
        per_axis = size if k == 1 else int(np.ceil(np.sqrt(size)))
        axes = [self._axis(lo, hi, per_axis) for lo, hi in self.gamma]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def _axis(self, lo: float, hi: float, num: int) -> FloatArray:
        if lo == hi:
            return np.array([lo])
        if self.family.spacing == "log" and lo > 0:
            return np.geomspace(lo, hi, num)
        return np.linspace(lo, hi, num)

    def standardized(self, gamma: FloatArray, design: Design) -> FloatArray:
        """Standardized increasing-branch predictions for (N, k) parameters."""
        x = self.family.stable_values(gamma, design.z_full)
        return standardize(np.atleast_2d(x), design.basis)

    def check(self, design: Design) -> None:
        """Reject parameter boxes on which the shape is constant everywhere.

        Raises:
            DegenerateShapeError: No grid point gives a non-constant shape.
        """
        x = self.family.stable_values(self.grid(64), design.z_full)
        if np.all(is_degenerate(np.atleast_2d(x), design.basis)):
            msg = f"{self.label} is constant on the design for every parameter value"
            raise DegenerateShapeError(msg)

    def to_json(self) -> Dict[str, Any]:
        out = self.family.to_json()
        k = self.family.n_params
        if k:
            if self.is_fixed:
                fixed = self.gamma[:, 0].tolist()
                out["gamma"] = {"fixed": fixed[0] if k == 1 else fixed}
            else:
                out["gamma"] = self.gamma[0].tolist() if k == 1 else self.gamma.tolist()
        out["direction"] = self.direction
        return out


@dataclasses.dataclass(frozen=True)
class Provenance:
    """Where each sampled anchor came from."""

    model_index: IntArray
    sign: IntArray
    gamma: FloatArray


@dataclasses.dataclass(frozen=True, eq=False)
class CandidateSet:
    """A nonempty union of candidate models, collapsed into a single composite model."""

    models: Tuple[CandidateModel, ...]

    def __post_init__(self) -> None:
        models = tuple(self.models)
        if not models:
            msg = "a candidate set needs at least one model"
            raise DomainError(msg)
        object.__setattr__(self, "models", models)

    def __len__(self) -> int:
        return len(self.models)

    def __iter__(self) -> Iterator[CandidateModel]:
        return iter(self.models)

    def __getitem__(self, index: int) -> CandidateModel:
        return self.models[index]

    @property
    def branches(self) -> List[Tuple[int, int]]:
        """All (model index, sign) pairs; each is an equally weighted part of the manifold."""
        return [(i, s) for i, model in enumerate(self.models) for s in model.signs]

    @property
    def max_params(self) -> int:
        return max(model.family.n_params for model in self.models)

    @property
    def group_constant(self) -> bool:
        return all(model.family.group_constant for model in self.models)

    @property
    def is_point(self) -> bool:
        """True when the manifold is a single standardized prediction."""
        return len(self.branches) == 1 and self.models[0].is_fixed

    def subset(self, index: int) -> "CandidateSet":
        return CandidateSet((self.models[index],))

    def validate(self, design: Design) -> None:
        for model in self.models:
            model.check(design)

    def to_json(self) -> List[Dict[str, Any]]:
        return [model.to_json() for model in self.models]


def shape_values(family: ShapeFamily, gamma: Any, design: Design) -> FloatArray:
    """Evaluate the family at every observation of the design."""
    return family.values(gamma, design.z_full)


def standardized_prediction(
    model: CandidateModel,
    gamma: Any,
    design: Design,
    basis: Optional[ContrastBasis] = None,
) -> FloatArray:
    """The standardized prediction x_gamma on the unit sphere.

    Returns:
        A unit vector for single-direction models (negated for decreasing
        models), or a (2, d+1) array holding the increasing and decreasing
        branches when direction is "both".

    Raises:
        DegenerateShapeError: The shape is constant on the design.
    """
    basis = design.basis if basis is None else basis
    x = standardize(shape_values(model.family, gamma, design), basis)
    if x.ndim != 1:
        msg = "standardized_prediction takes a single parameter value"
        raise DomainError(msg)
    if model.direction == "both":
        return np.stack([x, -x])
    return model.signs[0] * x


@functools.lru_cache(maxsize=64)
def _arc_table(model: CandidateModel, design: Design) -> Tuple[FloatArray, FloatArray, bool]:
    if model.family.n_params != 1 or model.is_fixed:
        msg = f"arc length is only defined for one-parameter intervals, not {model.label}"
        raise DomainError(msg)
    grid = model.grid(ARC_RESOLUTION)
    x = model.standardized(grid, design)
    cos = np.clip(np.sum(x[1:] * x[:-1], axis=1), -1, 1)
    cumulative = np.concatenate([[0.0], np.cumsum(np.arccos(cos))])
    logscale = model.family.spacing == "log" and grid[0, 0] > 0
    axis = np.log(grid[:, 0]) if logscale else grid[:, 0]
    return cumulative, axis, logscale


def _arc_quantile(model: CandidateModel, design: Design, u: np.ndarray) -> FloatArray:
    cumulative, axis, logscale = _arc_table(model, design)
    g = np.interp(np.asarray(u) * cumulative[-1], cumulative, axis)
    return np.exp(g) if logscale else g


def arc_length(model: CandidateModel, design: Design) -> float:
    """Length of the model curve on the sphere, in radians."""
    return float(_arc_table(model, design)[0][-1])


def arc_length_grid(
    model: CandidateModel,
    design: Design,
    basis: Optional[ContrastBasis] = None,
    num: int = 25,
) -> FloatArray:
    """Parameter values whose predictions are equally spaced along the model curve."""
    return _arc_quantile(model, design, np.linspace(0, 1, int(num)))


def sample_model_point(
    cs: CandidateSet,
    design: Design,
    basis: Optional[ContrastBasis],
    rng: np.random.Generator,
    size: Optional[int] = None,
    anchor_sampling: AnchorSampling = "uniform",
) -> Tuple[FloatArray, Provenance]:
    """Draw anchors W from a distribution H supported on the whole manifold.

    A branch (model and sign) is chosen uniformly, then gamma uniformly on
    the model's box, or uniformly in arc length along the model curve when
    `anchor_sampling` is "arclength".

    Returns:
        The (size, d+1) anchors (a single vector when size is None) and
        their provenance.
    """
    if basis is not None and basis.n != design.n:
        msg = f"basis for n={basis.n} does not match the design with n={design.n}"
        raise InvalidDesignError(msg)
    anchor_sampling = validators.choice(anchor_sampling, AnchorSampling)
    count = 1 if size is None else int(size)
    branches = cs.branches
    choice = rng.integers(len(branches), size=count)

    anchors = np.empty((count, design.n - 1))
    model_index = np.empty(count, dtype=np.int64)
    signs = np.empty(count, dtype=np.int64)
    gammas = np.full((count, cs.max_params), np.nan)
    for b, (i, sign) in enumerate(branches):
        rows = np.flatnonzero(choice == b)
        if rows.size == 0:
            continue
        model = cs.models[i]
        k = model.family.n_params
        if anchor_sampling == "arclength" and k == 1 and not model.is_fixed:
            gamma = _arc_quantile(model, design, rng.random(rows.size)).reshape(-1, 1)
        else:
            gamma = model.sample_gamma(rng, rows.size)
        anchors[rows] = sign * model.standardized(gamma, design)
        model_index[rows] = i
        signs[rows] = sign
        gammas[rows, :k] = gamma

    provenance = Provenance(model_index=model_index, sign=signs, gamma=gammas)
    if size is None:
        return anchors[0], provenance
    return anchors, provenance


def zero_one(values: np.ndarray) -> FloatArray:
    """Rescale a response curve to 0 at its first and 1 at its last dose."""
    values = np.asarray(values, dtype=float)
    span = values[..., -1:] - values[..., :1]
    if np.any(span == 0):
        msg = "cannot zero-one standardize a curve with equal end points"
        raise DegenerateShapeError(msg)
    return (values - values[..., :1]) / span
