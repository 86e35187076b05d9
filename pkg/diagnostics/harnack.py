#!/usr/bin/env python3
"""
Dual-function concavity, the Harnack inequality and lower speed bounds.

With kappa_i = 1/lambda_i and Delta = sum kappa_i, the dual function of
F = H^rho-type speeds is Phi(lambda) = -Delta^rho. Its -rho concavity is
the positive semi-definiteness of

    M_ij = 2 rho Delta^(rho-2) (-kappa_i^2 kappa_j^2 + Delta kappa_i^3 delta_ij)
         = -(Phi_ij - (1 + 1/rho) Phi_i Phi_j / Phi).

Along the flow, the speed at a fixed normal direction p obeys
F(t2) / F(t1) >= (t1 / t2)^(rho / (rho + 1)).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.errors import DirectionNotAttained
from core.geometry import GeometryFields, geometry_fields
from core.grid import GridFunction
from core.solver import Trajectory
from flow_types import CsvValue, FloatArray, MinorConvention, NodeIndex

logger = logging.getLogger(__name__)

EIGEN_TOL = 1e-10
MINOR_TOL = 1e-8
HESSIAN_TOL = 1e-4
# Relative perturbation for the finite-difference Hessian of Phi
_HESSIAN_STEP = 1e-5
# Direction search fails when the closest normal is further than this times dx max|D2u|
_DIRECTION_REACH = 5.0
# Harnack tolerance: ratio >= bound (1 - HARNACK_BUDGET dx^2 / min(t1, 1))
HARNACK_BUDGET = 50.0


# =====================================================================
# Dual concavity
# =====================================================================

def concavity_matrix(rho: float, lambdas: Sequence[float]) -> FloatArray:
    lam = np.asarray(lambdas, dtype=np.float64)
    kappa = 1.0 / lam
    delta = float(np.sum(kappa))
    core = -np.outer(kappa ** 2, kappa ** 2) + np.diag(delta * kappa ** 3)
    return 2.0 * rho * delta ** (rho - 2.0) * core


def principal_minors(
    rho: float,
    lambdas: Sequence[float],
    convention: MinorConvention = MinorConvention.DERIVED,
) -> FloatArray:
    """Closed-form leading principal minors k = 1..n."""
    kappa = 1.0 / np.asarray(lambdas, dtype=np.float64)
    delta = float(np.sum(kappa))
    out = np.empty(len(kappa))
    for k in range(1, len(kappa) + 1):
        prod = float(np.prod(kappa[:k]))
        lead = (2.0 * rho * delta ** (rho - 1.0)) ** k
        tail = delta - float(np.sum(kappa[:k]))
        if convention is MinorConvention.DERIVED:
            out[k - 1] = lead * prod ** 3 * tail / delta
        else:
            out[k - 1] = lead * tail / (delta * prod ** 3)
    return out


def _phi(lam: FloatArray, rho: float) -> float:
    return -float(np.sum(1.0 / lam)) ** rho


def fd_concavity_matrix(rho: float, lambdas: Sequence[float]) -> Tuple[FloatArray, float]:
    """-(Phi_ij - (1 + 1/rho) Phi_i Phi_j / Phi) from central differences of Phi.

    Also returns the size of the two terms, the natural scale of the
    rounding error when they cancel.
    """
    lam = np.asarray(lambdas, dtype=np.float64)
    n = len(lam)
    h = _HESSIAN_STEP * lam
    eye = np.eye(n)
    phi0 = _phi(lam, rho)
    grad = np.array([
        (_phi(lam + h[i] * eye[i], rho) - _phi(lam - h[i] * eye[i], rho)) / (2.0 * h[i])
        for i in range(n)
    ])
    hess = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            ei, ej = h[i] * eye[i], h[j] * eye[j]
            val = (
                _phi(lam + ei + ej, rho) - _phi(lam + ei - ej, rho)
                - _phi(lam - ei + ej, rho) + _phi(lam - ei - ej, rho)
            ) / (4.0 * h[i] * h[j])
            hess[i, j] = hess[j, i] = val
    cross = (1.0 + 1.0 / rho) * np.outer(grad, grad) / phi0
    scale = float(np.linalg.norm(hess) + np.linalg.norm(cross))
    return -(hess - cross), scale


@dataclass
class ConcavitySample:
    lambdas: Tuple[float, ...]
    min_eigenvalue: float
    norm: float
    minor_error: float
    hessian_error: float

    @property
    def eigen_ok(self) -> bool:
        return self.min_eigenvalue >= -EIGEN_TOL * self.norm


@dataclass
class DualConcavityReport:
    rho: float
    convention: MinorConvention
    samples: List[ConcavitySample] = field(default_factory=list)
    check_hessian: bool = True

    @property
    def min_eigen_ratio(self) -> float:
        return min((s.min_eigenvalue / s.norm if s.norm > 0 else 0.0 for s in self.samples), default=0.0)

    @property
    def max_minor_error(self) -> float:
        return max((s.minor_error for s in self.samples), default=0.0)

    @property
    def max_hessian_error(self) -> float:
        return max((s.hessian_error for s in self.samples), default=0.0)

    @property
    def passed(self) -> bool:
        ok = all(s.eigen_ok for s in self.samples) and self.max_minor_error <= MINOR_TOL
        if self.check_hessian:
            ok = ok and self.max_hessian_error <= HESSIAN_TOL
        return ok

    def rows(self) -> List[List[CsvValue]]:
        return [
            [self.rho, k, *s.lambdas, s.min_eigenvalue, s.norm, s.minor_error, s.hessian_error]
            for k, s in enumerate(self.samples)
        ]


def sample_lambdas(count: int, n: int, seed: int, low: float = 1e-2, high: float = 1e2) -> FloatArray:
    """Log-uniform principal curvatures, reproducible from the seed."""
    rng = np.random.default_rng(seed)
    return 10.0 ** rng.uniform(np.log10(low), np.log10(high), size=(count, n))


def dual_concavity_check(
    rho: float,
    lambda_samples: Sequence[Sequence[float]],
    convention: MinorConvention = MinorConvention.DERIVED,
    check_hessian: bool = True,
) -> DualConcavityReport:
    if not rho > 0:
        raise ValueError(f"rho must be > 0, got {rho}")
    samples = np.atleast_2d(np.asarray(lambda_samples, dtype=np.float64))
    if np.any(samples <= 0) or not np.all(np.isfinite(samples)):
        raise ValueError("principal curvatures must be finite and > 0")

    report = DualConcavityReport(rho, convention, check_hessian=check_hessian)
    for lam in samples:
        M = concavity_matrix(rho, lam)
        eig = np.linalg.eigvalsh(M)
        # entries cancel (exactly so for a single curvature); size them by the
        # larger diagonal term 2 rho Delta^(rho-1) kappa_i^3 instead
        kappa = 1.0 / lam
        terms = 2.0 * rho * float(np.sum(kappa)) ** (rho - 1.0) * kappa ** 3
        norm = max(float(np.max(np.abs(eig))), float(np.max(terms)))
        closed = principal_minors(rho, lam, convention)
        minor_err = 0.0
        for k in range(1, len(lam) + 1):
            direct = float(np.linalg.det(M[:k, :k]))
            # Hadamard bound on the minor sets the scale
            scale = float(np.prod(terms[:k]))
            if scale > 0:
                minor_err = max(minor_err, abs(closed[k - 1] - direct) / scale)
            else:
                minor_err = max(minor_err, abs(closed[k - 1] - direct))
        hess_err = 0.0
        if check_hessian:
            fd, term_scale = fd_concavity_matrix(rho, lam)
            denom = max(float(np.linalg.norm(M)), term_scale)
            hess_err = float(np.linalg.norm(fd - M)) / denom
        report.samples.append(ConcavitySample(tuple(float(x) for x in lam), float(eig[0]), norm, minor_err, hess_err))

    level = logging.INFO if report.passed else logging.WARNING
    logger.log(
        level,
        f"Dual concavity rho={rho} ({convention.value}): min eig ratio {report.min_eigen_ratio}, "
        f"minor error {report.max_minor_error}, hessian error {report.max_hessian_error}",
    )
    return report


# =====================================================================
# Locating a normal direction
# =====================================================================

@dataclass(frozen=True)
class DirectionHit:
    """Point where the normal equals p, refined from the nearest node."""
    node: NodeIndex
    point: Tuple[float, ...]
    shift: Tuple[float, ...]
    distance: float
    F: float
    H: float
    height: float


def _linear_correction(field_values: FloatArray, node: NodeIndex, shift: FloatArray, dx: float) -> float:
    grads = np.gradient(field_values, dx, edge_order=2)
    if field_values.ndim == 1:
        grads = [grads]
    slope = np.array([g[node] for g in grads])
    return float(field_values[node] + slope @ shift)


def locate_direction(u: GridFunction, fields: GeometryFields, direction: Sequence[float]) -> DirectionHit:
    p = np.asarray(direction, dtype=np.float64)
    if p.shape != (u.n + 1,):
        raise ValueError(f"direction needs {u.n + 1} components, got {p.shape}")
    p = p / np.linalg.norm(p)
    spec = u.spec
    inner = spec.interior()
    gaps = np.linalg.norm(fields.nu[inner] - p, axis=-1)
    flat = int(np.argmin(gaps))
    local = np.unravel_index(flat, gaps.shape)
    node = tuple(int(i) + 1 for i in local)
    distance = float(gaps[local])

    hess = fields.D2u[inner]
    reach = _DIRECTION_REACH * spec.dx * float(np.max(np.linalg.norm(hess, ord=2, axis=(-2, -1))))
    if p[-1] >= 0.0 or distance > reach:
        raise DirectionNotAttained(p.tolist(), u.t, distance)

    # one Newton step on Du(x + s) = q
    q = p[:-1] / -p[-1]
    shift = np.linalg.solve(fields.D2u[node], q - fields.Du[node])
    F = _linear_correction(fields.F, node, shift, spec.dx)
    H = _linear_correction(fields.H, node, shift, spec.dx)
    height = u.at(node) + float(fields.Du[node] @ shift) + 0.5 * float(shift @ fields.D2u[node] @ shift)
    point = tuple(float(c) for c in np.asarray(spec.point_of(node)) + shift)
    return DirectionHit(node, point, tuple(float(c) for c in shift), distance, F, H, height)


# =====================================================================
# Harnack inequality
# =====================================================================

@dataclass(frozen=True)
class HarnackRecord:
    direction: Tuple[float, ...]
    t1: float
    t2: float
    F1: float
    F2: float
    rho: float
    dx: float

    @property
    def ratio(self) -> float:
        return self.F2 / self.F1

    @property
    def bound(self) -> float:
        return (self.t1 / self.t2) ** (self.rho / (self.rho + 1.0))

    @property
    def threshold(self) -> float:
        return self.bound * (1.0 - HARNACK_BUDGET * self.dx ** 2 / min(self.t1, 1.0))

    @property
    def passed(self) -> bool:
        return self.F1 > 0 and self.F2 > 0 and self.ratio >= self.threshold

    def row(self) -> List[CsvValue]:
        return [*self.direction, self.t1, self.t2, self.F1, self.F2, self.ratio, self.bound,
                self.threshold, self.passed]


def harnack_check(
    traj: Trajectory,
    direction: Sequence[float],
    t1: float,
    t2: float,
    rho: Optional[float] = None,
) -> HarnackRecord:
    rho = traj.params.rho if rho is None else rho
    if not (0.0 < t1 <= t2 <= traj.times[-1] * (1.0 + 1e-12)):
        raise ValueError(f"Harnack check needs 0 < t1 <= t2 <= {traj.times[-1]!r}, got ({t1!r}, {t2!r})")
    speeds = []
    for t in (t1, t2):
        snap = traj.snapshot_at(t)
        hit = locate_direction(snap, geometry_fields(snap, rho), direction)
        speeds.append(hit.F)
    p = np.asarray(direction, dtype=np.float64)
    p = tuple(float(c) for c in p / np.linalg.norm(p))
    record = HarnackRecord(p, t1, t2, speeds[0], speeds[1], rho, traj.spec.dx)
    level = logging.INFO if record.passed else logging.WARNING
    logger.log(level, f"Harnack at p={p} t=({t1}, {t2}): ratio {record.ratio} vs bound {record.bound}")
    return record


# =====================================================================
# Lower speed bound
# =====================================================================

@dataclass
class VelocityFloorReport:
    x: Tuple[float, ...]
    t_x: float
    direction: Tuple[float, ...]
    times: List[float]
    H: List[float]
    psi: List[float]
    margin: float

    @property
    def floor(self) -> float:
        window = [h for t, h in zip(self.times, self.H) if 0.5 * self.t_x * (1.0 - 1e-12) <= t]
        return min(window)

    @property
    def psi_monotone(self) -> bool:
        """Height of the tracked point never decreases."""
        return all(b >= a - 1e-12 * max(1.0, abs(a)) for a, b in zip(self.psi, self.psi[1:]))

    @property
    def passed(self) -> bool:
        return self.floor > self.margin

    def rows(self) -> List[List[CsvValue]]:
        return [[t, h, s] for t, h, s in zip(self.times, self.H, self.psi)]


def velocity_floor_check(traj: Trajectory, x: Sequence[float], t_x: float) -> VelocityFloorReport:
    """Follow the point whose normal stays nu(x, 0) and bound H from below on [t_x/2, t_x]."""
    if not t_x > 0:
        raise ValueError(f"t_x must be > 0, got {t_x}")
    rho = traj.params.rho
    u0 = traj.initial
    spec = u0.spec
    if not spec.contains(x):
        raise ValueError(f"point {tuple(x)} lies outside the grid")
    fields0 = geometry_fields(u0, rho)
    direction = tuple(float(c) for c in fields0.nu[spec.node_at(x)])

    times, Hs, psi = [], [], []
    for snap in traj.snapshots:
        if snap.t > t_x * (1.0 + 1e-12):
            break
        hit = locate_direction(snap, geometry_fields(snap, rho), direction)
        times.append(snap.t)
        Hs.append(hit.H)
        psi.append(hit.height)
    if not any(t >= 0.5 * t_x * (1.0 - 1e-12) for t in times):
        raise ValueError(f"no snapshot in [{0.5 * t_x!r}, {t_x!r}]")

    report = VelocityFloorReport(
        tuple(float(c) for c in x), t_x, direction, times, Hs, psi,
        margin=10.0 * traj.params.convexity_floor,
    )
    level = logging.INFO if report.passed else logging.WARNING
    logger.log(level, f"Velocity floor at x={report.x}: min H {report.floor} on [{0.5 * t_x}, {t_x}]")
    return report


__all__ = [
    "concavity_matrix",
    "principal_minors",
    "fd_concavity_matrix",
    "sample_lambdas",
    "ConcavitySample",
    "DualConcavityReport",
    "dual_concavity_check",
    "DirectionHit",
    "locate_direction",
    "HarnackRecord",
    "harnack_check",
    "VelocityFloorReport",
    "velocity_floor_check",
]
