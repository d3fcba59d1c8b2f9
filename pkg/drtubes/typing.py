import os
import pathlib
from typing import Callable, Literal, Union

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]
IntArray = NDArray[np.int64]

PathLike = Union[str, pathlib.Path, os.PathLike]

FamilyName = Literal[
    "linear",
    "emax",
    "exponential",
    "sigEmax",
    "cosine",
    "powerRatio",
    "spiral",
]
Direction = Literal["increasing", "decreasing", "both"]
GridSpacing = Literal["log", "linear"]
AnchorSampling = Literal["uniform", "arclength"]
CurveKind = Literal["shapes", "power"]

# Densities on the sphere take an (k, d+1) array of unit vectors and return
# k non-negative values.
SphereDensity = Callable[[FloatArray], FloatArray]
