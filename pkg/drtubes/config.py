"""Run configuration and the data, candidate and study file formats."""

import contextlib
import csv
import dataclasses
import json
from typing import Any, Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from drtubes import tubes, validators
from drtubes.exceptions import ConfigError, DomainError, DrTubesError
from drtubes.models import CandidateModel, CandidateSet, Design
from drtubes.shapes import ShapeFamily, make_family
from drtubes.typing import AnchorSampling, FloatArray, PathLike


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Monte Carlo and test settings shared by every command.

    Attributes:
        seed: Master seed, a 64-bit unsigned integer.
        kappa: Base tube sample size.
        alpha: One-sided level.
        tol: Bracket width at which the critical value search stops.
        max_kappa: Largest tube sample size adaptive estimates may reach.
        se_target: Standard error at which adaptive estimates stop.
        threads: Worker threads; results do not depend on it.
        anchor_kappa: Compare every cap sample against at most this many anchors.
        grid_size: Grid points per model for the sup over gamma.
        anchor_sampling: "uniform" in gamma or "arclength" along each model curve.
    """

    seed: int = 0
    kappa: int = tubes.DEFAULT_KAPPA
    alpha: float = 0.05
    tol: float = 1e-3
    max_kappa: int = tubes.DEFAULT_MAX_KAPPA
    se_target: float = tubes.DEFAULT_SE_TARGET
    threads: int = 1
    anchor_kappa: Optional[int] = tubes.DEFAULT_ANCHOR_KAPPA
    grid_size: int = 512
    anchor_sampling: AnchorSampling = "uniform"

    def __post_init__(self) -> None:
        seed = validators.integer(self.seed, minimum=0)
        if seed >= 2**64:
            msg = f"seed={self.seed!r} does not fit in 64 bits"
            raise DomainError(msg)
        object.__setattr__(self, "seed", seed)
        object.__setattr__(self, "kappa", validators.integer(self.kappa, minimum=tubes.MIN_KAPPA))
        object.__setattr__(self, "alpha", validators.level(self.alpha))
        object.__setattr__(self, "tol", validators.positive(self.tol, name="tol"))
        object.__setattr__(self, "max_kappa", validators.integer(self.max_kappa, minimum=self.kappa))
        object.__setattr__(self, "se_target", validators.positive(self.se_target, name="se_target"))
        object.__setattr__(self, "threads", validators.integer(self.threads, minimum=1))
        object.__setattr__(self, "anchor_kappa", validators.integer(self.anchor_kappa, minimum=2))
        object.__setattr__(self, "grid_size", validators.integer(self.grid_size, minimum=2))
        object.__setattr__(self, "anchor_sampling", validators.choice(self.anchor_sampling, AnchorSampling))

    def sampler_options(self) -> Dict[str, Any]:
        """Keyword arguments of the tube sampler."""
        return {"threads": self.threads, "anchor_kappa": self.anchor_kappa, "anchor_sampling": self.anchor_sampling}

    def probability_options(self) -> Dict[str, Any]:
        """Keyword arguments of adaptive tube probabilities."""
        return {**self.sampler_options(), "se_target": self.se_target, "max_kappa": self.max_kappa}

    def to_json(self) -> Dict[str, Any]:
        """The settings that determine results; `threads` is left out so reports match across machines."""
        obj = dataclasses.asdict(self)
        del obj["threads"]
        return obj

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - names
        if unknown:
            msg = f"unknown run settings {sorted(unknown)!r}"
            raise ConfigError(msg)
        return cls(**obj)


def read_data_csv(filename: PathLike) -> Tuple[FloatArray, FloatArray]:
    """Read a `dose,response` CSV with one row per observation.

    Raises:
        ConfigError: The header lacks a column or a value is not a finite number;
            the message carries the line number.
    """
    doses, responses = [], []
    with open(filename, newline="", encoding="utf-8") as file:
        reader = csv.DictReader(file)
        fields = [f.strip().lower() for f in (reader.fieldnames or [])]
        if "dose" not in fields or "response" not in fields:
            msg = f"expected a 'dose,response' header, got {reader.fieldnames!r}"
            raise ConfigError(msg, line=1)
        reader.fieldnames = fields
        for row in reader:
            line = reader.line_num
            for name, target in (("dose", doses), ("response", responses)):
                text = row.get(name)
                try:
                    value = float(text)
                except (TypeError, ValueError):
                    msg = f"{name} {text!r} is not a number"
                    raise ConfigError(msg, line=line) from None
                if not np.isfinite(value):
                    msg = f"{name} {text!r} is not finite"
                    raise ConfigError(msg, line=line)
                target.append(value)
    if not doses:
        msg = f"{filename} contains no observations"
        raise ConfigError(msg)
    return np.array(doses), np.array(responses)


def write_data_csv(filename: PathLike, dose: np.ndarray, response: np.ndarray) -> None:
    with open(filename, "w", newline="", encoding="utf-8") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(["dose", "response"])
        writer.writerows(zip(map(repr, map(float, dose)), map(repr, map(float, response))))


def read_json(filename: PathLike) -> Any:
    try:
        with open(filename, encoding="utf-8") as file:
            return json.load(file)
    except json.JSONDecodeError as e:
        msg = f"{filename}: {e.msg}"
        raise ConfigError(msg, line=e.lineno) from None


def _require(obj: Mapping[str, Any], key: str, where: str) -> Any:
    if not isinstance(obj, Mapping) or key not in obj:
        msg = f"{where} needs a {key!r} entry"
        raise ConfigError(msg)
    return obj[key]


@contextlib.contextmanager
def _numeric(where: str) -> Iterator[None]:
    """Report values that are not numbers, like gamma="abc", as a ConfigError."""
    try:
        yield
    except DrTubesError:
        raise
    except (TypeError, ValueError) as e:
        msg = f"{where} has a value that is not a number: {e}"
        raise ConfigError(msg) from None


def parse_family(obj: Mapping[str, Any]) -> ShapeFamily:
    name = _require(obj, "family", "a model")
    kwargs = {"lam": obj["lambda"]} if "lambda" in obj else {}
    try:
        return make_family(name, **kwargs)
    except TypeError:
        msg = f"family {name!r} does not take {sorted(kwargs)!r}"
        raise ConfigError(msg) from None


def _parse_gamma(value: Any) -> Any:
    if isinstance(value, Mapping):
        return _require(value, "fixed", "a gamma object")
    return value


def parse_candidate(obj: Mapping[str, Any]) -> CandidateModel:
    """Parse one entry of the candidate schema.

    {"family": name, "gamma": [lo, hi] | [[lo, hi], [lo, hi]] | {"fixed": value},
    "direction": "increasing" | "decreasing" | "both"}; "lambda" sets the
    spiral frequency.
    """
    unknown = set(obj) - {"family", "gamma", "direction", "lambda"}
    if unknown:
        msg = f"unknown candidate keys {sorted(unknown)!r}"
        raise ConfigError(msg)
    family = parse_family(obj)
    gamma = _parse_gamma(obj.get("gamma"))
    if family.n_params and gamma is None:
        msg = f"{family.name} needs a 'gamma' entry"
        raise ConfigError(msg)
    with _numeric(f"the {family.name} candidate"):
        return CandidateModel(family, gamma, obj.get("direction", "increasing"))


def parse_candidates(obj: Any) -> CandidateSet:
    if isinstance(obj, Mapping):
        obj = _require(obj, "candidates", "a candidate file")
    if not isinstance(obj, list):
        msg = f"candidates must be a list, got {type(obj).__name__}"
        raise ConfigError(msg)
    return CandidateSet(tuple(parse_candidate(entry) for entry in obj))


def read_candidates(filename: PathLike) -> CandidateSet:
    return parse_candidates(read_json(filename))


def candidates_to_json(cs: CandidateSet) -> List[Dict[str, Any]]:
    return cs.to_json()


def parse_design(obj: Mapping[str, Any]) -> Design:
    doses = _require(obj, "doses", "a design")
    counts = _require(obj, "n_per_dose", "a design")
    with _numeric("the design"):
        return Design(doses, counts)


def parse_alternative(obj: Mapping[str, Any], design: Design, alpha: float) -> tubes.Alternative:
    """Parse {"family", "gamma", and one of "delta", "effect_size" or "target_power"}.

    "effect_size" is beta / sigma; "target_power" sets delta so that the
    locally optimal test has that power.
    """
    family = parse_family(obj)
    gamma = _parse_gamma(obj.get("gamma"))
    given = [key for key in ("delta", "effect_size", "target_power") if key in obj]
    if len(given) != 1:
        msg = f"an alternative needs exactly one of delta, effect_size, target_power; got {given!r}"
        raise ConfigError(msg)
    with _numeric(f"the {family.name} alternative"):
        if gamma is not None:
            gamma = np.asarray(gamma, dtype=float).tolist()
        if "delta" in obj:
            return tubes.Alternative(family, gamma, obj["delta"])
        if "effect_size" in obj:
            return tubes.Alternative.from_effect(family, gamma, design, obj["effect_size"])
        delta = tubes.solve_delta(family, gamma, design, None, obj["target_power"], alpha)
        return tubes.Alternative(family, gamma, delta)
