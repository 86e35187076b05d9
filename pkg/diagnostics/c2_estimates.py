#!/usr/bin/env python3
"""
Localized curvature monitor.

A patch is a frame fixed at t = 0: the tangent plane of the initial graph
at a seed point, lifted by `offset` along the upward normal -nu_s. Its
lower region M- holds the graph points on or below that plane, and on M-

    -x~ = offset - <X - P_s, -nu_s>      (height below the plane)
    v   = 1 / <nu, nu_s>                 (gradient function of the frame)

The monitor tracks max over M- of (-x~)^rho F e^(beta v rho) and the same
quantity multiplied by t^rho.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy import optimize

from core.errors import PatchInvalid
from core.exact_solutions import SphereSolution, sphere_radius
from core.geometry import geometry_fields
from core.grid import GridFunction
from core.solver import Trajectory
from flow_types import CsvValue, FloatArray

logger = logging.getLogger(__name__)

# The time-weighted series may grow at most this much past its early maximum
GROWTH_FACTOR = 3.0


@dataclass(frozen=True)
class Patch:
    seed: Sequence[float]
    offset: float
    G: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "seed", tuple(float(c) for c in self.seed))
        if not self.offset > 0:
            raise ValueError(f"patch offset must be > 0, got {self.offset}")
        if not self.G > 0:
            raise ValueError(f"gradient bound G must be > 0, got {self.G}")

    @property
    def v_max(self) -> float:
        return math.sqrt(1.0 + self.G ** 2)


@dataclass(frozen=True)
class PatchFrame:
    """Seed point P_s and downward normal nu_s read off the initial graph."""
    origin: FloatArray
    normal: FloatArray

    @classmethod
    def from_graph(cls, u: GridFunction, patch: Patch) -> "PatchFrame":
        spec = u.spec
        if not spec.contains(patch.seed):
            raise ValueError(f"patch seed {patch.seed} lies outside the grid")
        node = spec.node_at(patch.seed)
        fields = geometry_fields(u, 1.0)
        origin = np.array(spec.point_of(node) + (u.at(node),))
        return cls(origin=origin, normal=np.array(fields.nu[node]))


@dataclass
class C2Monitor:
    beta: float
    patch: Patch
    times: List[float]
    weighted: List[float]
    unweighted: List[float]
    patch_nodes: List[int]

    def first_quarter_max(self) -> float:
        t0, t1 = self.times[0], self.times[-1]
        cut = t0 + 0.25 * (t1 - t0)
        early = [q for t, q in zip(self.times, self.weighted) if t <= cut * (1.0 + 1e-12) and t > 0]
        if not early:
            raise ValueError("first quarter of the window holds no snapshot after t = 0")
        return max(early)

    @property
    def flagged(self) -> bool:
        return max(self.weighted) > GROWTH_FACTOR * self.first_quarter_max()

    @property
    def passed(self) -> bool:
        return not self.flagged

    def rows(self) -> List[List[CsvValue]]:
        return [
            [t, q2, q1, k]
            for t, q2, q1, k in zip(self.times, self.weighted, self.unweighted, self.patch_nodes)
        ]


def patch_maximum(u: GridFunction, frame: PatchFrame, patch: Patch, beta: float, rho: float) -> tuple:
    """Max over M- of (-x~)^rho F e^(beta v rho) and the number of patch nodes."""
    spec = u.spec
    fields = geometry_fields(u, rho)
    X = np.concatenate([spec.coords(), u.values[..., None]], axis=-1)
    up = -frame.normal
    depth = patch.offset - np.einsum("...a,a->...", X - frame.origin, up)
    inside = depth >= 0.0
    count = int(np.count_nonzero(inside))
    if count == 0:
        return 0.0, 0
    if np.any(inside & ~spec.interior_mask()):
        raise PatchInvalid(u.t, "lower region reaches the grid boundary")
    tilt = np.einsum("...a,a->...", fields.nu, frame.normal)[inside]
    if np.any(tilt <= 0.0):
        raise PatchInvalid(u.t, "normal leaves the frame's hemisphere")
    v = 1.0 / tilt
    if np.any(v > patch.v_max):
        raise PatchInvalid(u.t, f"gradient exceeds G={patch.G} (v={float(np.max(v))!r})")
    F = fields.F[inside]
    if not np.all(np.isfinite(F)):
        raise PatchInvalid(u.t, "mean convexity lost inside the patch")
    q = np.power(depth[inside], rho) * F * np.exp(beta * v * rho)
    return float(np.max(q)), count


def c2_monitor(traj: Trajectory, beta: float, patch: Patch, rho: Optional[float] = None) -> C2Monitor:
    if not beta > 1:
        raise ValueError(f"beta must be > 1, got {beta}")
    rho = traj.params.rho if rho is None else rho
    frame = PatchFrame.from_graph(traj.initial, patch)
    times, weighted, unweighted, counts = [], [], [], []
    for snap in traj.snapshots:
        q, k = patch_maximum(snap, frame, patch, beta, rho)
        times.append(snap.t)
        unweighted.append(q)
        weighted.append(snap.t ** rho * q)
        counts.append(k)
    monitor = C2Monitor(beta, patch, times, weighted, unweighted, counts)
    if len(times) > 1:
        level = logging.WARNING if monitor.flagged else logging.INFO
        logger.log(level, f"C2 monitor: peak {max(weighted)}, flagged={monitor.flagged}")
    return monitor


def c2_closed_form(sphere: SphereSolution, t: float, beta: float, offset: float, G: Optional[float] = None) -> float:
    """Unweighted patch maximum on an exact sphere, patch seeded at its south pole at t = 0.

    A point at angle theta from the pole has -x~ = offset - r0 + r(t) cos(theta),
    v = 1 / cos(theta) and F = (c_H / r)^rho.
    """
    rho = sphere.rho
    r = sphere_radius(sphere, t)
    a = offset - sphere.r0
    s_lo = max(-a / r, 1e-12)
    if G is not None:
        s_lo = max(s_lo, 1.0 / math.sqrt(1.0 + G * G))
    if s_lo > 1.0:
        return 0.0
    F = (sphere.c_H / r) ** rho

    def log_q(s: float) -> float:
        gap = a + r * s
        if gap <= 0.0:
            return -math.inf
        return rho * math.log(gap) + beta * rho / s

    best = log_q(1.0)
    if s_lo < 1.0:
        res = optimize.minimize_scalar(lambda s: -log_q(s), bounds=(s_lo, 1.0), method="bounded",
                                       options={"xatol": 1e-12})
        if res.success:
            best = max(best, -float(res.fun))
    if best == -math.inf:
        return 0.0
    return F * math.exp(best)


__all__ = [
    "GROWTH_FACTOR",
    "Patch",
    "PatchFrame",
    "C2Monitor",
    "patch_maximum",
    "c2_monitor",
    "c2_closed_form",
]
