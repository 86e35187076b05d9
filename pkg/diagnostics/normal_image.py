#!/usr/bin/env python3
"""
Disjointness of gradient images: Du(B_r, t) against Du(R^n minus B_R, 0).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.spatial import cKDTree

from core.geometry import derivatives
from core.solver import Trajectory
from flow_types import CsvValue

logger = logging.getLogger(__name__)


@dataclass
class NormalImageReport:
    r: float
    R: float
    T: float
    times: List[float]
    distances: List[float]
    margins: List[float]

    @property
    def disjoint(self) -> List[bool]:
        return [d > m for d, m in zip(self.distances, self.margins)]

    @property
    def passed(self) -> bool:
        return all(self.disjoint)

    def rows(self) -> List[List[CsvValue]]:
        return [[t, d, m, ok] for t, d, m, ok in zip(self.times, self.distances, self.margins, self.disjoint)]


def _hessian_peak(D2u: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(D2u, ord=2, axis=(-2, -1))))


def normal_image_disjointness(traj: Trajectory, r: float, R: float, T: float) -> NormalImageReport:
    if not (0.0 < r < R):
        raise ValueError(f"need 0 < r < R, got r={r}, R={R}")
    if T < 0:
        raise ValueError(f"T must be >= 0, got {T}")
    spec = traj.spec
    if R >= spec.half_width:
        raise ValueError(f"R={R} must lie inside the grid half width {spec.half_width}")
    radius = spec.radius()
    inner = radius < r
    outer = radius >= R
    if not np.any(inner):
        raise ValueError(f"ball of radius {r} holds no grid nodes")

    Du0, D2u0 = derivatives(traj.initial)
    tree = cKDTree(Du0[outer].reshape(-1, spec.n))
    peak0 = _hessian_peak(D2u0)

    times, distances, margins = [], [], []
    for snap in traj.snapshots:
        if snap.t > T * (1.0 + 1e-12):
            break
        Du, D2u = derivatives(snap)
        dist, _ = tree.query(Du[inner].reshape(-1, spec.n))
        times.append(snap.t)
        distances.append(float(np.min(dist)))
        margins.append(2.0 * spec.dx * max(peak0, _hessian_peak(D2u)))

    report = NormalImageReport(r, R, T, times, distances, margins)
    level = logging.INFO if report.passed else logging.WARNING
    logger.log(level, f"Normal images r={r} R={R} T={T}: min separation {min(distances)}")
    return report


__all__ = ["NormalImageReport", "normal_image_disjointness"]
