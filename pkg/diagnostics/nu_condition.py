#!/usr/bin/env python3
"""
Oscillation of the normal at infinity, and its preservation along the flow.

For a radius r the profile records the largest |nu(p) - nu(q)| over pairs of
graph points p, q in R^(n+1) with |p - q| < pair_distance and |p|, |q| >= r.
Pairs are found with a KD-tree over the (optionally strided) grid nodes, so
the scan is exhaustive for the sampled nodes and fully deterministic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from core.exact_solutions import BarrierSpec
from core.geometry import derivatives, unit_normal
from core.grid import GridFunction
from core.solver import Trajectory
from flow_types import CsvValue, ProfileExpectation

logger = logging.getLogger(__name__)

# Sampling noise allowed when checking that a profile does not increase
PROFILE_NOISE = 1e-3
# A decaying profile must at least halve between its first and last radius
DECAY_FRACTION = 0.5
# A plateau keeps every entry at or above this level
PLATEAU_LEVEL = 0.5
# Nodes per axis kept by the default stride in two dimensions
_DEFAULT_NODES_2D = 64


@dataclass
class NuProfile:
    radii: List[float]
    eps_of_r: List[float]
    pair_count: List[int]
    t: float = 0.0

    def nonempty(self) -> List[float]:
        return [e for e, c in zip(self.eps_of_r, self.pair_count) if c > 0]

    def is_nonincreasing(self, noise: float = PROFILE_NOISE) -> bool:
        vals = self.nonempty()
        return all(b <= a + noise for a, b in zip(vals, vals[1:]))

    def decays(self) -> bool:
        vals = self.nonempty()
        if not vals:
            return False
        if not self.is_nonincreasing():
            return False
        return vals[0] == 0.0 or vals[-1] <= DECAY_FRACTION * vals[0]

    def plateaus(self, level: float = PLATEAU_LEVEL) -> bool:
        vals = self.nonempty()
        return bool(vals) and all(v >= level for v in vals)

    def meets(self, expectation: ProfileExpectation) -> bool:
        if expectation is ProfileExpectation.DECAY:
            return self.decays()
        if expectation is ProfileExpectation.PLATEAU:
            return self.plateaus()
        return True

    def rows(self) -> List[List[CsvValue]]:
        return [[self.t, r, e, c] for r, e, c in zip(self.radii, self.eps_of_r, self.pair_count)]


def default_stride(u: GridFunction) -> int:
    if u.n == 1:
        return 1
    return max(1, math.ceil(u.spec.nodes_per_axis / _DEFAULT_NODES_2D))


def nu_profile(
    u: GridFunction,
    radii: Sequence[float],
    pair_distance: float = 1.0,
    stride: Optional[int] = None,
) -> NuProfile:
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError(f"radii must be strictly increasing, got {radii}")
    if not pair_distance > 0:
        raise ValueError(f"pair distance must be > 0, got {pair_distance}")
    stride = default_stride(u) if stride is None else int(stride)
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")

    Du, _ = derivatives(u)
    sub = (slice(None, None, stride),) * u.n
    coords = u.spec.coords()[sub]
    points = np.concatenate([coords, u.values[sub][..., None]], axis=-1).reshape(-1, u.n + 1)
    normals = unit_normal(Du)[sub].reshape(-1, u.n + 1)
    norms = np.linalg.norm(points, axis=-1)

    tree = cKDTree(points)
    pairs = tree.query_pairs(pair_distance, output_type="ndarray")
    if len(pairs):
        i, j = pairs[:, 0], pairs[:, 1]
        close = np.linalg.norm(points[i] - points[j], axis=-1) < pair_distance
        i, j = i[close], j[close]
    else:
        i = j = np.zeros(0, dtype=np.intp)
    swing = np.linalg.norm(normals[i] - normals[j], axis=-1)
    reach = np.minimum(norms[i], norms[j])

    eps_of_r: List[float] = []
    counts: List[int] = []
    for r in radii:
        keep = reach >= r
        count = int(np.count_nonzero(keep))
        counts.append(count)
        eps_of_r.append(float(np.max(swing[keep])) if count else float("nan"))
    logger.debug(f"nu profile at t={u.t}: {list(zip(radii, eps_of_r))}")
    return NuProfile(radii, eps_of_r, counts, t=u.t)


@dataclass
class NuPreservationReport:
    profiles: List[NuProfile]
    slack: float

    @property
    def worst_excess(self) -> float:
        """Largest eps(t) - eps(0) over radii that are non-empty at both times."""
        base = self.profiles[0]
        worst = -math.inf
        for prof in self.profiles[1:]:
            for e0, c0, e, c in zip(base.eps_of_r, base.pair_count, prof.eps_of_r, prof.pair_count):
                if c0 and c:
                    worst = max(worst, e - e0)
        return worst if worst > -math.inf else 0.0

    @property
    def passed(self) -> bool:
        return self.worst_excess <= self.slack

    def rows(self) -> List[List[CsvValue]]:
        return [row for prof in self.profiles for row in prof.rows()]


def nu_preservation_check(
    traj: Trajectory,
    radii: Sequence[float],
    pair_distance: float = 1.0,
    stride: Optional[int] = None,
) -> NuPreservationReport:
    profiles = [nu_profile(s, radii, pair_distance, stride) for s in traj.snapshots]
    report = NuPreservationReport(profiles, slack=10.0 * traj.spec.dx)
    level = logging.INFO if report.passed else logging.WARNING
    logger.log(level, f"nu preservation: worst excess {report.worst_excess} (slack {report.slack})")
    return report


@dataclass
class BarrierHeightReport:
    """If u(., 0) <= delta on B_{r_delta} then u <= eps on B_{r_eps} up to T."""
    barrier: BarrierSpec
    initial_sup: float
    later_sup: float
    times: List[float] = field(default_factory=list)

    @property
    def premise_holds(self) -> bool:
        return self.initial_sup <= self.barrier.delta

    @property
    def passed(self) -> bool:
        return (not self.premise_holds) or self.later_sup <= self.barrier.eps

    def rows(self) -> List[List[CsvValue]]:
        b = self.barrier
        return [[b.eps, b.r_eps, b.T, b.h, b.delta, b.r_delta, self.initial_sup, self.later_sup,
                 self.premise_holds, self.passed]]


def barrier_height_check(traj: Trajectory, barrier: BarrierSpec) -> BarrierHeightReport:
    """Interior grid nodes stand in for the balls."""
    spec = traj.spec
    inner = spec.interior_mask()
    radius = spec.radius()
    start = inner & (radius <= barrier.r_delta)
    later = inner & (radius <= barrier.r_eps)
    if not np.any(start) or not np.any(later):
        raise ValueError("barrier balls contain no interior grid nodes")
    initial_sup = float(np.max(traj.initial.values[start]))
    window = [s for s in traj.snapshots if s.t <= barrier.T * (1.0 + 1e-12)]
    later_sup = max(float(np.max(s.values[later])) for s in window)
    report = BarrierHeightReport(barrier, initial_sup, later_sup, [s.t for s in window])
    logger.info(
        f"Barrier height: sup u(0) on B_rdelta = {initial_sup}, sup u on B_reps = {later_sup}, "
        f"premise {'holds' if report.premise_holds else 'fails'}"
    )
    return report


__all__ = [
    "NuProfile",
    "nu_profile",
    "default_stride",
    "NuPreservationReport",
    "nu_preservation_check",
    "BarrierHeightReport",
    "barrier_height_check",
]
