import math
from typing import Optional, Sequence

import numpy as np


def number(value: float) -> str:
    """Shortest round-trip representation, so CSV output is reproducible across platforms."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    return repr(value)


def percent(value: float, digits: int = 1) -> str:
    return f"{100 * float(value):.{digits}f}"


def pvalue(value: float, se: Optional[float] = None) -> str:
    text = "<0.0001" if 0 < value < 1e-4 else f"{value:.4f}"
    if se:
        text = f"{text} (se {se:.4f})"
    return text


def gamma(values: Sequence[float]) -> str:
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if values.size == 0:
        return "-"
    return ", ".join(f"{v:.4g}" for v in values)
