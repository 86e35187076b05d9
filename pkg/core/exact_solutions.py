#!/usr/bin/env python3
"""
Exact solutions used as oracles, barriers and initial data.

A sphere of radius r moving by H^rho has H = c_H / r, so its radius obeys
dr/dt = -(c_H / r)^rho and

    r(t) = (r0^(rho+1) - (rho+1) c_H^rho t)^(1/(rho+1)).

c_H defaults to n (every principal curvature of an n-sphere is 1/r). Other
constants, e.g. n-1 for the barrier height, can be passed explicitly as c_H.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize
from scipy.special import logsumexp

from core.errors import BarrierNotFound, GridExceedsCap, SphereVanished, UnknownScenario
from core.grid import GridFunction, GridSpec
from flow_types import FloatArray, InitialDataGenerator

logger = logging.getLogger(__name__)


# =====================================================================
# Shrinking spheres
# =====================================================================

@dataclass(frozen=True)
class SphereSolution:
    """Round sphere in R^(n+1) shrinking under the H^rho flow."""
    center: Tuple[float, ...]
    r0: float
    rho: float
    n: int
    c_H: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")
        if len(self.center) != self.n + 1:
            raise ValueError(f"center needs {self.n + 1} coordinates, got {len(self.center)}")
        if not self.r0 > 0:
            raise ValueError(f"r0 must be > 0, got {self.r0}")
        if not self.rho > 0:
            raise ValueError(f"rho must be > 0, got {self.rho}")
        if self.c_H is None:
            object.__setattr__(self, "c_H", float(self.n))
        elif not self.c_H > 0:
            raise ValueError(f"c_H must be > 0, got {self.c_H}")

    @property
    def extinction_time(self) -> float:
        return self.r0 ** (self.rho + 1.0) / ((self.rho + 1.0) * self.c_H ** self.rho)

    def radius(self, t: float) -> float:
        return sphere_radius(self, t)

    def speed(self, t: float) -> float:
        """F = (c_H / r(t))^rho."""
        return (self.c_H / sphere_radius(self, t)) ** self.rho

    def mean_curvature(self, t: float) -> float:
        return self.c_H / sphere_radius(self, t)


def sphere_radius(s: SphereSolution, t: float) -> float:
    t_star = s.extinction_time
    if t < 0 or t > t_star:
        raise SphereVanished(t, t_star)
    base = s.r0 ** (s.rho + 1.0) - (s.rho + 1.0) * s.c_H ** s.rho * t
    return max(base, 0.0) ** (1.0 / (s.rho + 1.0))


def sphere_radius_ode(s: SphereSolution, t: float, rtol: float = 1e-10) -> float:
    """r(t) from integrating dr/dt = -(c_H/r)^rho numerically."""
    t_star = s.extinction_time
    if t < 0 or t >= t_star:
        raise SphereVanished(t, t_star)
    if t == 0:
        return s.r0
    sol = integrate.solve_ivp(
        lambda _t, r: -(s.c_H / r) ** s.rho,
        (0.0, t),
        [s.r0],
        method="RK45",
        rtol=rtol,
        atol=rtol * 1e-2 * s.r0,
    )
    if not sol.success:
        raise RuntimeError(f"radius ODE failed: {sol.message}")
    return float(sol.y[0, -1])


def _check_footprint(s: SphereSolution, r: float, spec: GridSpec) -> None:
    c_h = np.abs(np.asarray(s.center[: s.n]))
    far_corner = float(np.sqrt(np.sum((spec.half_width + c_h) ** 2)))
    if far_corner >= r:
        raise GridExceedsCap(
            f"grid box reaches {far_corner!r} from the cap axis but the sphere radius is {r!r}"
        )


def cap_height(s: SphereSolution, t: float, points: FloatArray) -> FloatArray:
    """Height of the lower cap over points of shape (..., n)."""
    r = sphere_radius(s, t)
    pts = np.asarray(points, dtype=np.float64)
    d2 = np.sum((pts - np.asarray(s.center[: s.n])) ** 2, axis=-1)
    if np.any(d2 >= r * r):
        raise GridExceedsCap(f"points leave the cap projection of radius {r!r}")
    return s.center[-1] - np.sqrt(r * r - d2)


def sphere_cap_graph(s: SphereSolution, t: float, spec: GridSpec) -> GridFunction:
    """Lower spherical cap at time t written as a graph over the grid."""
    if spec.n != s.n:
        raise ValueError(f"grid dimension {spec.n} does not match sphere dimension {s.n}")
    r = sphere_radius(s, t)
    _check_footprint(s, r, spec)
    return GridFunction.from_spec(spec, cap_height(s, t, spec.coords()), t=t)


# =====================================================================
# Barrier spheres
# =====================================================================

@dataclass(frozen=True)
class BarrierSpec:
    """Solved barrier sphere: height tolerance eps held on B_{r_eps} up to T."""
    eps: float
    r_eps: float
    T: float
    h: float
    delta: float
    r_delta: float
    rho: float
    n: int
    c_H: float

    def residual(self) -> float:
        return barrier_residual(self.h, self.eps, self.r_eps, self.T, self.rho, self.c_H)

    def relative_residual(self) -> float:
        return abs(self.residual()) / (self.h + 0.5 * self.eps) ** (self.rho + 1.0)

    def sphere(self) -> SphereSolution:
        """Sphere centered at (0, ..., 0, h + eps) with radius h + eps/2."""
        center = (0.0,) * self.n + (self.h + self.eps,)
        return SphereSolution(center, self.h + 0.5 * self.eps, self.rho, self.n, self.c_H)


def barrier_residual(h: float, eps: float, r_eps: float, T: float, rho: float, c_H: float) -> float:
    p = rho + 1.0
    return (h + 0.5 * eps) ** p - (h * h + r_eps * r_eps) ** (0.5 * p) - p * c_H ** rho * T


def solve_barrier(
    eps: float,
    r_eps: float,
    T: float,
    rho: float,
    n: int,
    c_H: Optional[float] = None,
) -> BarrierSpec:
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if not r_eps > 0:
        raise ValueError(f"r_eps must be > 0, got {r_eps}")
    if T < 0:
        raise ValueError(f"T must be >= 0, got {T}")
    if not rho > 0:
        raise ValueError(f"rho must be > 0, got {rho}")
    c = float(n) if c_H is None else float(c_H)

    lo = 0.5 * eps
    hi = 1e6 * max(r_eps, T, 1.0)
    g = lambda h: barrier_residual(h, eps, r_eps, T, rho, c)
    g_lo, g_hi = g(lo), g(hi)
    if not (g_lo < 0.0 < g_hi):
        raise BarrierNotFound(
            f"r_eps too small for this horizon: no sign change on [{lo!r}, {hi!r}] "
            f"(eps={eps!r}, r_eps={r_eps!r}, T={T!r}, rho={rho!r})"
        )
    h = optimize.bisect(g, lo, hi, xtol=1e-12, maxiter=400)
    logger.debug(f"Barrier solved: eps={eps} r_eps={r_eps} T={T} -> h={h}")
    return BarrierSpec(
        eps=eps, r_eps=r_eps, T=T, h=float(h),
        delta=0.5 * eps, r_delta=float(h) + 0.5 * eps,
        rho=rho, n=n, c_H=c,
    )


# =====================================================================
# Scenarios (initial data)
# =====================================================================

ScenarioBuilder = Callable[..., FloatArray]


@dataclass(frozen=True)
class ScenarioInfo:
    name: str
    description: str
    params: Tuple[str, ...] = ()
    defaults: Tuple[float, ...] = ()
    builder: Optional[Callable[[GridSpec, Tuple[float, ...]], GridFunction]] = field(
        default=None, repr=False, compare=False
    )


def _paraboloid(spec: GridSpec, args: Tuple[float, ...]) -> GridFunction:
    return spec.sample(lambda x: np.sum(x * x, axis=-1))


def _scaled_paraboloid(spec: GridSpec, args: Tuple[float, ...]) -> GridFunction:
    (a,) = args
    if not a > 0:
        raise ValueError(f"scaled_paraboloid needs a > 0, got {a}")
    return spec.sample(lambda x: a * np.sum(x * x, axis=-1))


def _smoothed_cone(spec: GridSpec, args: Tuple[float, ...]) -> GridFunction:
    (mu,) = args
    if not mu > 0:
        raise ValueError(f"smoothed_cone needs mu > 0, got {mu}")

    def cone(x: FloatArray) -> FloatArray:
        faces = np.concatenate([x, -x], axis=-1) / mu
        return mu * logsumexp(faces, axis=-1)

    return spec.sample(cone)


def hemisphere_sphere(r0: float, rho: float, n: int, c_H: Optional[float] = None) -> SphereSolution:
    """Sphere whose south pole touches the origin."""
    return SphereSolution((0.0,) * n + (float(r0),), r0, rho, n, c_H)


def _hemisphere(spec: GridSpec, args: Tuple[float, ...]) -> GridFunction:
    (r0,) = args
    return sphere_cap_graph(hemisphere_sphere(r0, 1.0, spec.n), 0.0, spec)


SCENARIOS: Dict[str, ScenarioInfo] = {
    info.name: info
    for info in (
        ScenarioInfo("paraboloid", "u = |x|^2", (), (), _paraboloid),
        ScenarioInfo("scaled_paraboloid", "u = a|x|^2", ("a",), (1.0,), _scaled_paraboloid),
        ScenarioInfo(
            "smoothed_cone", "u = mu log sum exp(+-x_i/mu), a smoothed max |x_i|",
            ("mu",), (0.05,), _smoothed_cone,
        ),
        ScenarioInfo("hemisphere", "lower cap of the sphere of radius r0 resting on the origin",
                     ("r0",), (2.0,), _hemisphere),
    )
}

_CALL_RE = re.compile(r"^\s*([A-Za-z_]\w*)\s*(?:\(\s*(.*?)\s*\))?\s*$")


def parse_scenario(text: str) -> Tuple[str, Tuple[float, ...]]:
    """Split 'smoothed_cone(0.05)' into ('smoothed_cone', (0.05,)), filling defaults."""
    m = _CALL_RE.match(text)
    if not m:
        raise UnknownScenario(f"cannot parse scenario {text!r}")
    name, raw = m.group(1), m.group(2)
    info = SCENARIOS.get(name)
    if info is None:
        raise UnknownScenario(f"unknown scenario {name!r}; known: {', '.join(sorted(SCENARIOS))}")
    args: List[float] = []
    if raw:
        try:
            args = [float(a) for a in raw.split(",")]
        except ValueError:
            raise UnknownScenario(f"scenario arguments must be numbers: {text!r}") from None
    if len(args) > len(info.params):
        raise UnknownScenario(f"{name} takes at most {len(info.params)} argument(s), got {len(args)}")
    args += list(info.defaults[len(args):])
    return name, tuple(args)


def format_scenario(name: str, args: Sequence[float]) -> str:
    if not args:
        return name
    return f"{name}({', '.join(repr(float(a)) for a in args)})"


def scenario(name: str, spec: GridSpec, *args: float) -> GridFunction:
    info = SCENARIOS.get(name)
    if info is None:
        raise UnknownScenario(f"unknown scenario {name!r}; known: {', '.join(sorted(SCENARIOS))}")
    full = tuple(float(a) for a in args) + info.defaults[len(args):]
    if len(full) != len(info.params):
        raise UnknownScenario(f"{name} takes {len(info.params)} argument(s), got {len(args)}")
    return info.builder(spec, full)


def scenario_generator(text: str) -> InitialDataGenerator:
    name, args = parse_scenario(text)
    return lambda spec: scenario(name, spec, *args)


__all__ = [
    "SphereSolution",
    "sphere_radius",
    "sphere_radius_ode",
    "cap_height",
    "sphere_cap_graph",
    "BarrierSpec",
    "barrier_residual",
    "solve_barrier",
    "hemisphere_sphere",
    "ScenarioInfo",
    "SCENARIOS",
    "parse_scenario",
    "format_scenario",
    "scenario",
    "scenario_generator",
]
