from __future__ import annotations
import os
from typing import Callable, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt


PathLike = Union[str, "os.PathLike[str]"]

FloatArray = npt.NDArray[np.float64]
# real or complex lattice samples
SampleArray = npt.NDArray[np.inexact]
# one coordinate array per axis, as produced by numpy.meshgrid
Coordinates = Tuple[FloatArray, ...]
Point = Tuple[float, ...]
PointwiseFunction = Callable[..., Union[float, npt.ArrayLike]]
RealSequence = Union[Sequence[float], FloatArray]
