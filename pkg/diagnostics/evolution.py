#!/usr/bin/env python3
"""
Evolution equations checked on exact shrinking spheres.

On a sphere of radius r the operator F^ij d_i d_j is a(r) times the
Laplace-Beltrami operator, a = rho (c_H/r)^(rho-1). Time derivatives are
taken by centered differences along the normal trajectory X(t) = c + r(t) w,
so the left sides are measured while the right sides come from the curvature
terms. For the gradient function both sides are built from the cap as a
graph (its derivatives, metric and Christoffel symbols at the sampled point),
so no term cancels algebraically.

  speed:              dF/dt - F^ij F_;ij  = F F^ij h_ik h^k_j
  gradient function:  dv/dt - F^ij v_;ij  = -F^ij h_ik h^k_j v - 2/v F^ij v_i v_j
  position:           dX/dt - F^ij X_;ij  = (rho - 1) F nu
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from core.exact_solutions import SphereSolution, sphere_radius
from flow_types import CsvValue, EvolutionIdentity

logger = logging.getLogger(__name__)

# Finite-difference step in units of the natural time r^(rho+1) / c_H^rho
_FD_STEP = 1e-6
_MIN_FD_STEP = 1e-12
DEFAULT_ANGLE = 0.5


@dataclass(frozen=True)
class IdentityResidual:
    identity: EvolutionIdentity
    t: float
    radius: float
    lhs: float
    rhs: float
    residual: float

    def row(self) -> List[CsvValue]:
        return [self.identity.value, self.t, self.radius, self.lhs, self.rhs, self.residual]


def _time_step(sphere: SphereSolution, t: float) -> float:
    t_star = sphere.extinction_time
    if not (0.0 < t < t_star):
        raise ValueError(f"identity check needs 0 < t < {t_star!r}, got {t!r}")
    r = sphere_radius(sphere, t)
    k = _FD_STEP * r ** (sphere.rho + 1.0) / sphere.c_H ** sphere.rho
    while k > _MIN_FD_STEP * t_star and not (t - k > 0.0 and t + k < t_star):
        k *= 0.5
    if not (t - k > 0.0 and t + k < t_star):
        raise ValueError(f"t={t!r} is too close to 0 or to extinction for a centered difference")
    return k


def _centered(f: Callable[[float], float], t: float, k: float) -> float:
    return (f(t + k) - f(t - k)) / (2.0 * k)


def _speed_identity(s: SphereSolution, t: float, k: float, angle: float) -> Tuple[float, float]:
    r = sphere_radius(s, t)
    F = s.speed(t)
    a = s.rho * (s.c_H / r) ** (s.rho - 1.0)
    lhs = _centered(s.speed, t, k)
    rhs = F * a * s.n / r ** 2
    return lhs, rhs


def _cap_jets(y: np.ndarray, r: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """First, second and third derivatives of the lower cap u = -sqrt(r^2 - |y|^2) at y."""
    n = y.size
    s = math.sqrt(r * r - float(y @ y))
    eye = np.eye(n)
    du = y / s
    d2u = eye / s + np.outer(y, y) / s ** 3
    d3u = (
        np.einsum("ij,k->ijk", eye, y) + np.einsum("ik,j->ijk", eye, y) + np.einsum("jk,i->ijk", eye, y)
    ) / s ** 3 + 3.0 * np.einsum("i,j,k->ijk", y, y, y) / s ** 5
    return du, d2u, d3u


def _gradient_function_identity(s: SphereSolution, t: float, k: float, angle: float) -> Tuple[float, float]:
    # Graph point under X(t) = c + r(t) w, w at `angle` from the south pole.
    # dv/dt follows the normal: time difference at a fixed x plus transport by the
    # horizontal velocity of X. The operator terms are assembled from the graph's
    # metric, Christoffel symbols and second fundamental form at x.
    n = s.n
    e1 = np.zeros(n)
    e1[0] = 1.0
    sin_a = math.sin(angle)
    r = sphere_radius(s, t)
    y = r * sin_a * e1

    def v_fixed(time: float) -> float:
        rt = sphere_radius(s, time)
        return rt / math.sqrt(rt * rt - float(y @ y))

    du, d2u, d3u = _cap_jets(y, r)
    W2 = 1.0 + float(du @ du)
    W = math.sqrt(W2)
    g_up = np.eye(n) - np.outer(du, du) / W2
    h = d2u / W
    H = float(np.einsum("ij,ij->", g_up, h))
    F_up = s.rho * H ** (s.rho - 1.0) * g_up

    dv = d2u @ du / W
    d2v = (d2u @ d2u + np.einsum("k,kij->ij", du, d3u)) / W - np.outer(dv, dv) / W
    christoffel = np.einsum("k,ij->kij", du, d2u) / W2
    hess_v = d2v - np.einsum("kij,k->ij", christoffel, dv)

    r_dot = _centered(lambda time: sphere_radius(s, time), t, k)
    dv_dt = _centered(v_fixed, t, k) + r_dot * sin_a * float(dv @ e1)
    A2 = float(np.einsum("ij,jk,kl,li->", F_up, h, g_up, h))
    lhs = dv_dt - float(np.einsum("ij,ij->", F_up, hess_v))
    rhs = -A2 * W - 2.0 / W * float(dv @ F_up @ dv)
    return lhs, rhs


def _position_identity(s: SphereSolution, t: float, k: float, angle: float) -> Tuple[float, float]:
    w = np.zeros(s.n + 1)
    w[0] = math.sin(angle)
    w[-1] = -math.cos(angle)
    center = np.asarray(s.center)

    def X(time: float) -> np.ndarray:
        return center + sphere_radius(s, time) * w

    r = sphere_radius(s, t)
    F = s.speed(t)
    a = s.rho * (s.c_H / r) ** (s.rho - 1.0)
    dX = (X(t + k) - X(t - k)) / (2.0 * k)
    lhs_vec = dX + a * s.n * w / r
    rhs_vec = (s.rho - 1.0) * F * w
    # both sides are parallel to w; report their signed lengths
    return float(lhs_vec @ w), float(rhs_vec @ w)


_IDENTITIES = {
    EvolutionIdentity.SPEED: _speed_identity,
    EvolutionIdentity.GRADIENT_FUNCTION: _gradient_function_identity,
    EvolutionIdentity.POSITION: _position_identity,
}


def evolution_identity_check(
    sphere: SphereSolution,
    t: float,
    identity: EvolutionIdentity = EvolutionIdentity.SPEED,
    angle: float = DEFAULT_ANGLE,
) -> IdentityResidual:
    """Relative residual of one evolution identity on the exact sphere at time t."""
    if not (0.0 <= angle < 0.5 * math.pi):
        raise ValueError(f"angle must lie in [0, pi/2), got {angle}")
    k = _time_step(sphere, t)
    lhs, rhs = _IDENTITIES[identity](sphere, t, k, angle)
    if identity is EvolutionIdentity.POSITION:
        scale = max(abs(rhs), sphere.speed(t))
    else:
        scale = abs(rhs)
    residual = abs(lhs - rhs) / scale
    return IdentityResidual(identity, t, sphere_radius(sphere, t), lhs, rhs, residual)


def identity_sweep(
    samples: int,
    seed: int,
    identity: EvolutionIdentity = EvolutionIdentity.SPEED,
) -> List[IdentityResidual]:
    """Residuals over random spheres: rho in [0.25, 5], n in {1, 2, 3}, r0 in [0.1, 10]."""
    rng = np.random.default_rng(seed)
    out: List[IdentityResidual] = []
    for _ in range(samples):
        rho = float(rng.uniform(0.25, 5.0))
        n = int(rng.integers(1, 4))
        r0 = float(10.0 ** rng.uniform(-1.0, 1.0))
        angle = float(rng.uniform(0.0, 1.2))
        sphere = SphereSolution((0.0,) * n + (r0,), r0, rho, n)
        t = float(rng.uniform(0.05, 0.9)) * sphere.extinction_time
        out.append(evolution_identity_check(sphere, t, identity, angle))
    worst = max((r.residual for r in out), default=0.0)
    logger.info(f"Evolution identity '{identity.value}': worst residual {worst} over {samples} spheres")
    return out


__all__ = [
    "IdentityResidual",
    "evolution_identity_check",
    "identity_sweep",
]
