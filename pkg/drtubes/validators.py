import typing
from typing import Any, Optional, Type

import numpy as np

from drtubes.exceptions import DomainError


def choice(value: Any, choice_class: Type) -> Optional[str]:
    if value is None:
        return None

    choices = {str(c).lower(): c for c in typing.get_args(choice_class)}
    try:
        return choices[str(value).lower()]
    except KeyError:
        msg = f"{value!r} was not a valid choice; valid choices: {', '.join(choices.values())}"
        raise DomainError(msg) from None


def integer(value: Any, *, minimum: Optional[int] = None) -> Optional[int]:
    if value is None:
        return None
    if isinstance(value, float) and not value.is_integer():
        msg = f"{value!r} is not an integer"
        raise DomainError(msg)
    result = int(value)
    if minimum is not None and result < minimum:
        msg = f"{value!r} is smaller than the minimum {minimum}"
        raise DomainError(msg)
    return result


def level(value: Any) -> float:
    """Coerce a significance level; must lie in (0, 0.5]."""
    alpha = float(value)
    if not 0 < alpha <= 0.5:
        msg = f"alpha={value!r} must lie in (0, 0.5]"
        raise DomainError(msg)
    return alpha


def probability(value: Any, *, name: str = "probability") -> float:
    p = float(value)
    if not 0 < p < 1:
        msg = f"{name}={value!r} must lie in (0, 1)"
        raise DomainError(msg)
    return p


def positive(value: Any, *, name: str = "value") -> float:
    x = float(value)
    if not np.isfinite(x) or x <= 0:
        msg = f"{name}={value!r} must be positive and finite"
        raise DomainError(msg)
    return x


def correlation(value: Any) -> float:
    r = float(value)
    if not -1 <= r <= 1:
        msg = f"r={value!r} must lie in [-1, 1]"
        raise DomainError(msg)
    return r


def unit_rows(data: np.ndarray, tolerance: float = 1e-10) -> np.ndarray:
    """Return `data` as a 2-D array after checking every row has unit norm."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    rss = np.sqrt(np.sum(data**2, axis=1))
    valid = np.abs(rss - 1) <= tolerance
    if not np.all(valid):
        bad = int(np.flatnonzero(~valid)[0])
        msg = f"row {bad} has norm {rss[bad]!r}; expected a unit vector"
        raise DomainError(msg)
    return data
