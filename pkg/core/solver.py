#!/usr/bin/env python3
"""
Explicit time stepping of the graphical flow

    du/dt = sqrt(1 + |Du|^2) * H^rho

on a truncated box, plus the studies built on top of it: ordered runs for
the comparison principle and nested domains for the entire-graph limit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.errors import ConvexityLost, DomainRunFailed, FlowError, StiffnessFailure
from core.exact_solutions import SphereSolution, cap_height, sphere_cap_graph
from core.geometry import FlowFields, flow_fields, geometry_fields
from core.grid import GridFunction, GridSpec
from flow_types import BoundaryKind, CsvValue, FloatArray, InitialDataGenerator, TimeStepKind

logger = logging.getLogger(__name__)

MIN_TIME_STEP = 1e-14
# Relative gap below which a step is considered to have reached its target time
_SNAP_TOL = 1e-12
# Successive nested-domain differences below this count as converged
NESTED_NOISE_FLOOR = 1e-12


# =====================================================================
# Parameters
# =====================================================================

@dataclass(frozen=True)
class TimeStepPolicy:
    kind: TimeStepKind = TimeStepKind.CFL
    dt: Optional[float] = None
    safety: float = 0.9

    def validate(self) -> List[str]:
        errors: List[str] = []
        if not (0.0 < self.safety <= 1.0):
            errors.append(f"safety factor must be in (0, 1], got {self.safety}")
        if self.kind is TimeStepKind.FIXED and not (self.dt is not None and self.dt > 0):
            errors.append(f"fixed time step needs dt > 0, got {self.dt}")
        return errors


@dataclass(frozen=True)
class BoundaryPolicy:
    kind: BoundaryKind = BoundaryKind.EXTRAPOLATE
    barrier: Optional[SphereSolution] = None

    def validate(self) -> List[str]:
        if self.kind is BoundaryKind.BARRIER and self.barrier is None:
            return ["barrier boundary needs a sphere"]
        return []


@dataclass(frozen=True)
class FlowParams:
    rho: float
    n: int
    half_width: float
    dx: float
    t_end: float
    time_step: TimeStepPolicy = field(default_factory=TimeStepPolicy)
    boundary: BoundaryPolicy = field(default_factory=BoundaryPolicy)
    convexity_floor: float = 1e-12

    def validate(self) -> List[str]:
        errors: List[str] = []
        if not self.rho > 0:
            errors.append(f"rho must be > 0, got {self.rho}")
        try:
            spec = GridSpec(self.n, self.half_width, self.dx)
        except ValueError as e:
            errors.append(str(e))
            spec = None
        if not (np.isfinite(self.t_end) and self.t_end >= 0):
            errors.append(f"t_end must be >= 0, got {self.t_end}")
        if not self.convexity_floor >= 0:
            errors.append(f"convexity floor must be >= 0, got {self.convexity_floor}")
        errors.extend(self.time_step.validate())
        errors.extend(self.boundary.validate())
        if spec is not None and self.boundary.kind is BoundaryKind.EXTRAPOLATE and spec.nodes_per_axis < 5:
            errors.append("extrapolating boundary needs at least 5 nodes per axis")
        barrier = self.boundary.barrier
        if barrier is not None and barrier.n != self.n:
            errors.append(f"barrier sphere has dimension {barrier.n}, grid has {self.n}")
        return errors

    def validate_and_raise(self) -> None:
        errors = self.validate()
        if errors:
            raise ValueError("Invalid flow parameters: " + "; ".join(errors))

    @property
    def grid_spec(self) -> GridSpec:
        return GridSpec(self.n, self.half_width, self.dx)

    def with_half_width(self, half_width: float) -> "FlowParams":
        return replace(self, half_width=half_width)


# =====================================================================
# Records and trajectories
# =====================================================================

@dataclass(frozen=True)
class StepRecord:
    """Diagnostics of the state a step started from."""
    t: float
    dt: float
    min_H: float
    max_H: float
    max_grad: float
    max_speed: float
    masked: int

    COLUMNS = ("t", "dt", "min_H", "max_H", "max_grad", "max_speed", "masked")

    def row(self) -> List[CsvValue]:
        return [self.t, self.dt, self.min_H, self.max_H, self.max_grad, self.max_speed, self.masked]


@dataclass
class Trajectory:
    params: FlowParams
    snapshots: List[GridFunction]
    records: List[StepRecord] = field(default_factory=list)

    @classmethod
    def from_snapshots(cls, params: FlowParams, snapshots: Sequence[GridFunction]) -> "Trajectory":
        traj = cls(params, list(snapshots), [])
        traj.validate_and_raise()
        return traj

    @property
    def times(self) -> List[float]:
        return [s.t for s in self.snapshots]

    @property
    def initial(self) -> GridFunction:
        return self.snapshots[0]

    @property
    def final(self) -> GridFunction:
        return self.snapshots[-1]

    @property
    def spec(self) -> GridSpec:
        return self.snapshots[0].spec

    def snapshot_at(self, t: float, atol: float = 1e-12) -> GridFunction:
        for snap in self.snapshots:
            if abs(snap.t - t) <= atol * max(1.0, abs(t)):
                return snap
        raise ValueError(f"no snapshot at t={t!r}; have {self.times}")

    def validate(self) -> List[str]:
        errors: List[str] = []
        if not self.snapshots:
            return ["trajectory has no snapshots"]
        times = self.times
        if any(b <= a for a, b in zip(times, times[1:])):
            errors.append("snapshot times must be strictly increasing")
        shapes = {s.values.shape for s in self.snapshots}
        if len(shapes) > 1:
            errors.append("snapshots live on different grids")
        return errors

    def validate_and_raise(self) -> None:
        errors = self.validate()
        if errors:
            raise ValueError("Invalid trajectory: " + "; ".join(errors))

    def is_monotone(self) -> bool:
        """u never decreases at interior nodes between snapshots."""
        inner = self.spec.interior()
        return all(
            bool(np.all(b.values[inner] >= a.values[inner]))
            for a, b in zip(self.snapshots, self.snapshots[1:])
        )

    def columns(self) -> List[str]:
        return ["t"] + [f"x{i + 1}" for i in range(self.spec.n)] + ["u"]

    def rows(self) -> List[List[CsvValue]]:
        out: List[List[CsvValue]] = []
        for snap in self.snapshots:
            for _idx, point, value in snap.iter_nodes():
                out.append([snap.t, *point, value])
        return out

    def record_rows(self) -> List[List[CsvValue]]:
        return [r.row() for r in self.records]


# =====================================================================
# Stepping
# =====================================================================

def cfl_time_step(fields: FlowFields, params: FlowParams) -> float:
    """sigma dx^2 / (2 n max(W rho H^(rho-1))) over interior nodes."""
    inner = params.grid_spec.interior()
    H = fields.H[inner]
    coeff = fields.W[inner] * params.rho * np.power(np.maximum(H, params.convexity_floor), params.rho - 1.0)
    peak = float(np.max(coeff))
    return params.time_step.safety * params.dx ** 2 / (2.0 * params.n * peak)


def _check_mean_convex(fields: FlowFields, params: FlowParams, t: float) -> None:
    spec = params.grid_spec
    inner = spec.interior()
    H = fields.H[inner]
    bad = (H <= params.convexity_floor) | ~fields.mean_convex[inner]
    if np.any(bad):
        flat = int(np.argmin(np.where(bad, H, np.inf)))
        local = np.unravel_index(flat, H.shape)
        node = tuple(int(i) + 1 for i in local)
        raise ConvexityLost(node, t, float(fields.H[node]))


def _extrapolate_edges(inc: FloatArray) -> FloatArray:
    """Fill boundary increments by linear extrapolation, one axis at a time."""
    out = inc.copy()
    for k in range(out.ndim):
        v = np.moveaxis(out, k, 0)
        v[0] = 2.0 * v[1] - v[2]
        v[-1] = 2.0 * v[-2] - v[-3]
    return out


def _apply_boundary(old: GridFunction, new_values: FloatArray, t_new: float, params: FlowParams) -> None:
    spec = old.spec
    edge = ~spec.interior_mask()
    kind = params.boundary.kind
    if kind is BoundaryKind.FROZEN:
        new_values[edge] = old.values[edge]
    elif kind is BoundaryKind.BARRIER:
        pts = spec.coords()[edge]
        new_values[edge] = cap_height(params.boundary.barrier, t_new, pts)
    elif kind is BoundaryKind.EXTRAPOLATE:
        inc = new_values - old.values
        inc[edge] = 0.0
        inc = _extrapolate_edges(inc)
        new_values[edge] = old.values[edge] + inc[edge]
    else:
        raise ValueError(f"unknown boundary policy: {kind}")


def step(
    u: GridFunction,
    params: FlowParams,
    dt_max: Optional[float] = None,
) -> Tuple[GridFunction, StepRecord]:
    """One forward Euler step; dt is capped by dt_max when given."""
    fields = flow_fields(u, params.rho)
    _check_mean_convex(fields, params, u.t)

    if params.time_step.kind is TimeStepKind.FIXED:
        dt = float(params.time_step.dt)
    else:
        dt = cfl_time_step(fields, params)
    if dt_max is not None:
        dt = min(dt, dt_max)
    if dt < MIN_TIME_STEP:
        raise StiffnessFailure(dt, u.t)

    inner = params.grid_spec.interior()
    speed = fields.speed
    new_values = np.array(u.values, copy=True)
    new_values[inner] += dt * speed[inner]
    t_new = u.t + dt
    _apply_boundary(u, new_values, t_new, params)

    grad = np.sqrt(np.sum(fields.Du[inner] ** 2, axis=-1))
    record = StepRecord(
        t=u.t,
        dt=dt,
        min_H=float(np.min(fields.H[inner])),
        max_H=float(np.max(fields.H[inner])),
        max_grad=float(np.max(grad)),
        max_speed=float(np.max(speed[inner])),
        masked=int(np.count_nonzero(~fields.mean_convex)),
    )
    return u.with_values(new_values, t_new), record


def _cadence_targets(
    t0: float, t_end: float, every: Optional[float], extra: Iterable[float] = ()
) -> List[float]:
    targets: List[float] = []
    if every is not None:
        if not every > 0:
            raise ValueError(f"snapshot cadence must be > 0, got {every}")
        k = int(np.floor(t0 / every + _SNAP_TOL)) + 1
        while k * every < t_end * (1.0 - _SNAP_TOL):
            targets.append(k * every)
            k += 1
    for t in extra:
        t = float(t)
        if not t0 <= t <= t_end * (1.0 + _SNAP_TOL):
            raise ValueError(f"snapshot time {t!r} lies outside [{t0!r}, {t_end!r}]")
        if t - t0 > _SNAP_TOL * max(1.0, t) and t_end - t > _SNAP_TOL * max(1.0, t_end):
            targets.append(t)
    if t_end > t0:
        targets.append(t_end)
    # merge cadence and extra times; near-equal times collapse onto the first
    merged: List[float] = []
    for t in sorted(targets):
        if not merged or t - merged[-1] > _SNAP_TOL * max(1.0, t):
            merged.append(t)
    return merged


def _check_initial_datum(u0: GridFunction, params: FlowParams) -> None:
    if (u0.n, u0.half_width, u0.dx) != (params.n, params.half_width, params.dx):
        raise ValueError(
            f"initial datum grid (n={u0.n}, L={u0.half_width}, dx={u0.dx}) does not match "
            f"parameters (n={params.n}, L={params.half_width}, dx={params.dx})"
        )
    inner = params.grid_spec.interior()
    lam = geometry_fields(u0, params.rho).lambdas[inner][..., 0]
    if not np.all(lam > 0):
        flat = int(np.argmin(lam))
        node = tuple(int(i) + 1 for i in np.unravel_index(flat, lam.shape))
        raise ConvexityLost(node, u0.t, float(lam[np.unravel_index(flat, lam.shape)]))


def run(
    u0: GridFunction,
    params: FlowParams,
    snapshot_every: Optional[float] = None,
    snapshot_times: Iterable[float] = (),
) -> Trajectory:
    """Step u0 to t_end; snapshots at every multiple of the cadence, at each of
    snapshot_times and at t_end."""
    params.validate_and_raise()
    _check_initial_datum(u0, params)

    if params.time_step.kind is TimeStepKind.FIXED and params.t_end > u0.t:
        bound = cfl_time_step(flow_fields(u0, params.rho), params)
        if params.time_step.dt > bound:
            logger.warning(f"Fixed dt={params.time_step.dt} exceeds the CFL bound {bound} at t={u0.t}")

    logger.info(
        f"Running flow: rho={params.rho} n={params.n} L={params.half_width} dx={params.dx} "
        f"t_end={params.t_end} boundary={params.boundary.kind.value}"
    )
    snapshots = [u0]
    records: List[StepRecord] = []
    u = u0
    for target in _cadence_targets(u0.t, params.t_end, snapshot_every, snapshot_times):
        while target - u.t > _SNAP_TOL * max(1.0, target):
            u, rec = step(u, params, dt_max=target - u.t)
            records.append(rec)
        u = u.with_values(u.values, target)
        snapshots.append(u)
        logger.debug(f"Snapshot at t={target} after {len(records)} steps")

    logger.info(f"Flow finished: {len(records)} steps, {len(snapshots)} snapshots")
    return Trajectory(params, snapshots, records)


def cap_trajectory(
    sphere: SphereSolution,
    times: Iterable[float],
    spec: GridSpec,
    params: FlowParams,
) -> Trajectory:
    """Exact evolving caps wrapped as a trajectory so diagnostics can run on them."""
    snaps = [sphere_cap_graph(sphere, float(t), spec) for t in times]
    return Trajectory.from_snapshots(params, snaps)


# =====================================================================
# Comparison principle
# =====================================================================

@dataclass
class ComparisonReport:
    times: List[float]
    violations: List[float]
    slack: float

    @property
    def violation(self) -> float:
        return max(self.violations, default=0.0)

    @property
    def passed(self) -> bool:
        return self.violation <= self.slack

    def rows(self) -> List[List[CsvValue]]:
        return [[t, v] for t, v in zip(self.times, self.violations)]


def _positive_gap(low: FloatArray, high: FloatArray, inner: Tuple[slice, ...]) -> float:
    return float(max(0.0, np.max(low[inner] - high[inner])))


def comparison_run(
    lower: GridFunction,
    upper: Union[GridFunction, SphereSolution],
    params: FlowParams,
    snapshot_every: Optional[float] = None,
) -> ComparisonReport:
    """Run ordered data and record the worst ordering violation over time.

    An exact sphere as the upper datum is evaluated in closed form instead
    of being run.
    """
    spec = params.grid_spec
    inner = spec.interior()
    low_traj = run(lower, params, snapshot_every)

    if isinstance(upper, SphereSolution):
        uppers = [cap_height(upper, s.t, spec.coords()) for s in low_traj.snapshots]
        times = low_traj.times
        lows = [s.values for s in low_traj.snapshots]
    else:
        if np.any(lower.values > upper.values):
            raise ValueError("comparison needs lower <= upper pointwise at t=0")
        high_traj = run(upper, params, snapshot_every)
        times, lows, uppers = [], [], []
        for snap in low_traj.snapshots:
            try:
                other = high_traj.snapshot_at(snap.t)
            except ValueError:
                continue
            times.append(snap.t)
            lows.append(snap.values)
            uppers.append(other.values)

    violations = [_positive_gap(lo, hi, inner) for lo, hi in zip(lows, uppers)]
    report = ComparisonReport(times, violations, slack=10.0 * params.dx ** 2)
    logger.info(f"Comparison run: max violation {report.violation} (slack {report.slack})")
    return report


# =====================================================================
# Nested domains
# =====================================================================

@dataclass
class NestedDomainReport:
    domains: List[float]
    window: float
    dt: float
    differences: List[float]

    @property
    def comparisons(self) -> int:
        return len(self.differences)

    @property
    def degenerate(self) -> bool:
        return len(self.domains) < 3

    @property
    def ratios(self) -> List[float]:
        return [
            a / b if b > 0 else float("inf")
            for a, b in zip(self.differences, self.differences[1:])
        ]

    @property
    def monotone(self) -> bool:
        """Differences strictly decrease until they reach the noise floor."""
        if self.degenerate:
            return False
        return all(
            b < a or max(a, b) <= NESTED_NOISE_FLOOR
            for a, b in zip(self.differences, self.differences[1:])
        )

    def rows(self) -> List[List[CsvValue]]:
        return [
            [self.domains[k], self.domains[k + 1], d]
            for k, d in enumerate(self.differences)
        ]


def nested_domain_study(
    generator: InitialDataGenerator,
    params: FlowParams,
    domains: Sequence[float],
    snapshot_every: Optional[float] = None,
) -> NestedDomainReport:
    """Run the same datum on growing boxes and compare on [-L1/2, L1/2]^n."""
    domains = [float(L) for L in domains]
    if not domains:
        raise ValueError("nested domain study needs at least one domain")
    if any(b <= a for a, b in zip(domains, domains[1:])):
        raise ValueError(f"domains must be strictly increasing, got {domains}")
    window = 0.5 * domains[0]
    if len(domains) == 1:
        logger.warning("Nested domain study with a single domain is degenerate")
        return NestedDomainReport(domains, window, 0.0, [])

    data = []
    for L in domains:
        p = params.with_half_width(L)
        p.validate_and_raise()
        data.append((p, generator(p.grid_spec)))

    if params.time_step.kind is TimeStepKind.FIXED:
        dt = float(params.time_step.dt)
    else:
        dt = min(cfl_time_step(flow_fields(u0, p.rho), p) for p, u0 in data)
    fixed = TimeStepPolicy(TimeStepKind.FIXED, dt, params.time_step.safety)
    logger.info(f"Nested domain study over L={domains} with common dt={dt}")

    trajectories: List[Trajectory] = []
    for p, u0 in data:
        try:
            trajectories.append(run(u0, replace(p, time_step=fixed), snapshot_every))
        except FlowError as e:
            raise DomainRunFailed(p.half_width, e) from e

    differences: List[float] = []
    for a, b in zip(trajectories, trajectories[1:]):
        worst = 0.0
        for snap in a.snapshots:
            other = b.snapshot_at(snap.t)
            gap = np.abs(other.restricted(window).values - snap.restricted(window).values)
            worst = max(worst, float(np.max(gap)))
        differences.append(worst)
    report = NestedDomainReport(domains, window, dt, differences)
    logger.info(f"Nested domain differences: {differences}")
    return report


# =====================================================================
# Helpers for convergence and scaling studies
# =====================================================================

def observed_order(spacings: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(spacing)."""
    if len(spacings) != len(errors) or len(spacings) < 2:
        raise ValueError("observed order needs at least two (spacing, error) pairs")
    e = np.asarray(errors, dtype=np.float64)
    if np.any(e <= 0):
        raise ValueError("errors must be positive to measure an order")
    slope, _ = np.polyfit(np.log(np.asarray(spacings, dtype=np.float64)), np.log(e), 1)
    return float(slope)


def rescale(u: GridFunction, lam: float, rho: float) -> GridFunction:
    """lam * u(x / lam) on the lam-scaled grid, at time lam^(rho+1) t."""
    if not lam > 0:
        raise ValueError(f"scale factor must be > 0, got {lam}")
    spec = u.spec.scaled(lam)
    return GridFunction.from_spec(spec, lam * u.values, t=lam ** (rho + 1.0) * u.t)


__all__ = [
    "MIN_TIME_STEP",
    "NESTED_NOISE_FLOOR",
    "TimeStepPolicy",
    "BoundaryPolicy",
    "FlowParams",
    "StepRecord",
    "Trajectory",
    "cfl_time_step",
    "step",
    "run",
    "cap_trajectory",
    "ComparisonReport",
    "comparison_run",
    "NestedDomainReport",
    "nested_domain_study",
    "observed_order",
    "rescale",
]
