#!/usr/bin/env python3
"""
Base types and array aliases for the graph-flow laboratory.
"""

from typing import Tuple, Union

import numpy as np
import numpy.typing as npt

# ---------- Array aliases ----------
FloatArray = npt.NDArray[np.float64]
BoolArray = npt.NDArray[np.bool_]

# ---------- Grid addressing ----------
NodeIndex = Tuple[int, ...]
Point = Tuple[float, ...]

# ---------- Common scalar aliases ----------
CsvValue = Union[str, int, float, bool, None]
