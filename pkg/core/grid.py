#!/usr/bin/env python3
"""
Uniform grids over [-L, L]^n and scalar fields sampled on them.

A GridFunction is the discrete graph of u at one instant. Its value array is
read-only so that diagnostics can never alter a trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence, Tuple

import numpy as np

from core.errors import NonFiniteValues
from flow_types import FloatArray, NodeIndex, Point

# Tolerance when checking that 2L/dx is an integer
_SPACING_TOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Shape of a uniform grid: dimension, half width and spacing."""
    n: int
    half_width: float
    dx: float

    def __post_init__(self) -> None:
        if self.n not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.n}")
        if not self.half_width > 0:
            raise ValueError(f"half width must be > 0, got {self.half_width}")
        if not self.dx > 0:
            raise ValueError(f"spacing must be > 0, got {self.dx}")
        cells = 2.0 * self.half_width / self.dx
        if abs(cells - round(cells)) > _SPACING_TOL * max(1.0, cells):
            raise ValueError(f"2L/dx must be an integer, got {cells}")
        if round(cells) < 2:
            raise ValueError("grid needs at least 3 nodes per axis")

    @property
    def nodes_per_axis(self) -> int:
        return int(round(2.0 * self.half_width / self.dx)) + 1

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.nodes_per_axis,) * self.n

    @property
    def axis(self) -> FloatArray:
        return np.linspace(-self.half_width, self.half_width, self.nodes_per_axis)

    def coords(self) -> FloatArray:
        """Node coordinates with shape grid + (n,)."""
        axes = [self.axis] * self.n
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def radius(self) -> FloatArray:
        return np.sqrt(np.sum(self.coords() ** 2, axis=-1))

    def interior(self) -> Tuple[slice, ...]:
        return (slice(1, -1),) * self.n

    def interior_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[self.interior()] = True
        return mask

    def node_at(self, point: Sequence[float]) -> NodeIndex:
        """Nearest node to a point, clipped to the grid."""
        if len(point) != self.n:
            raise ValueError(f"point {tuple(point)} has wrong dimension for n={self.n}")
        idx = []
        for c in point:
            i = int(round((float(c) + self.half_width) / self.dx))
            idx.append(min(max(i, 0), self.nodes_per_axis - 1))
        return tuple(idx)

    def point_of(self, node: NodeIndex) -> Point:
        axis = self.axis
        return tuple(float(axis[i]) for i in node)

    def contains(self, point: Sequence[float]) -> bool:
        return all(abs(float(c)) <= self.half_width + 1e-12 for c in point)

    def window(self, half_width: float) -> Tuple[slice, ...]:
        """Slices selecting the nodes of [-half_width, half_width]^n."""
        k = int(round(half_width / self.dx))
        mid = self.nodes_per_axis // 2
        if k > mid:
            raise ValueError(f"window {half_width} exceeds grid half width {self.half_width}")
        return (slice(mid - k, mid + k + 1),) * self.n

    def scaled(self, factor: float) -> "GridSpec":
        return GridSpec(self.n, self.half_width * factor, self.dx * factor)

    def sample(self, fn, t: float = 0.0) -> "GridFunction":
        """Evaluate fn(coords) on the grid; fn receives shape grid + (n,)."""
        return GridFunction.from_spec(self, fn(self.coords()), t=t)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Scalar field u sampled at time t on a uniform grid."""
    n: int
    half_width: float
    dx: float
    values: FloatArray = field(repr=False)
    t: float = 0.0

    def __post_init__(self) -> None:
        spec = GridSpec(self.n, self.half_width, self.dx)
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.shape != spec.shape:
            raise ValueError(f"values shape {values.shape} does not match grid shape {spec.shape}")
        if not np.all(np.isfinite(values)):
            bad = int(np.count_nonzero(~np.isfinite(values)))
            raise NonFiniteValues(f"{bad} non-finite grid values")
        if not (np.isfinite(self.t) and self.t >= 0):
            raise ValueError(f"time must be finite and >= 0, got {self.t}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_spec(cls, spec: GridSpec, values: FloatArray, t: float = 0.0) -> "GridFunction":
        return cls(spec.n, spec.half_width, spec.dx, values, t)

    @property
    def spec(self) -> GridSpec:
        return GridSpec(self.n, self.half_width, self.dx)

    def with_values(self, values: FloatArray, t: float) -> "GridFunction":
        return GridFunction(self.n, self.half_width, self.dx, values, t)

    def restricted(self, half_width: float) -> "GridFunction":
        """Same samples restricted to a smaller centered box."""
        spec = self.spec
        sub = self.values[spec.window(half_width)]
        return GridFunction(self.n, half_width, self.dx, sub, self.t)

    def at(self, node: NodeIndex) -> float:
        return float(self.values[tuple(node)])

    def iter_nodes(self) -> Iterator[Tuple[NodeIndex, Point, float]]:
        axis = self.spec.axis
        for idx in np.ndindex(*self.values.shape):
            yield idx, tuple(float(axis[i]) for i in idx), float(self.values[idx])


__all__ = ["GridSpec", "GridFunction"]
