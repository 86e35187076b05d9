#!/usr/bin/env python3
"""
Pointwise differential geometry of a graph sampled on a uniform grid.

Derivatives are second-order finite differences (exact on quadratics). From
Du and D2u every classical quantity of the graph follows in closed form:

    W     = sqrt(1 + |Du|^2)          g_ij = delta_ij + u_i u_j
    nu    = (Du, -1) / W              g^ij = delta_ij - u_i u_j / W^2
    h_ij  = u_ij / W                  H    = h_ij g^ij,  K = det h / det g

Principal curvatures are the eigenvalues of A h A with A = g^(-1/2), which is
symmetric so the eigenvalues are real. Nodes with H <= 1e-12 are masked: the
speed F = H^rho is left as NaN there and callers decide what to do.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from core.errors import NonFiniteValues
from core.grid import GridFunction
from flow_types import BoolArray, CsvValue, DivergenceScheme, FloatArray, NodeIndex

logger = logging.getLogger(__name__)

# Nodes with H at or below this value are outside the mean-convexity mask
MEAN_CONVEXITY_THRESHOLD = 1e-12


# =====================================================================
# Finite differences
# =====================================================================

def _second_derivative(values: FloatArray, dx: float, axis: int) -> FloatArray:
    """u_kk along one axis: central inside, one-sided second order at the ends."""
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / dx ** 2
    if v.shape[0] >= 4:
        out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / dx ** 2
        out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / dx ** 2
    else:
        out[0] = out[1]
        out[-1] = out[-2]
    return np.moveaxis(out, 0, axis)


def derivatives(u: GridFunction) -> Tuple[FloatArray, FloatArray]:
    """Return (Du, D2u) with shapes grid + (n,) and grid + (n, n)."""
    values = np.asarray(u.values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise NonFiniteValues("derivatives need finite samples")
    n, dx = u.n, u.dx
    first = [np.gradient(values, dx, axis=k, edge_order=2) for k in range(n)]
    Du = np.stack(first, axis=-1)
    D2u = np.empty(values.shape + (n, n))
    for k in range(n):
        D2u[..., k, k] = _second_derivative(values, dx, k)
    for i in range(n):
        for j in range(i + 1, n):
            # computed once, mirrored so u_ij == u_ji bit for bit
            mixed = np.gradient(first[i], dx, axis=j, edge_order=2)
            D2u[..., i, j] = mixed
            D2u[..., j, i] = mixed
    return Du, D2u


def unit_normal(Du: FloatArray) -> FloatArray:
    """Downward unit normal (Du, -1)/W, shape grid + (n+1,)."""
    W = np.sqrt(1.0 + np.sum(Du * Du, axis=-1))
    lifted = np.concatenate([Du, -np.ones(Du.shape[:-1] + (1,))], axis=-1)
    return lifted / W[..., None]


def _sym_eigvals(S: FloatArray) -> FloatArray:
    """Ascending eigenvalues of stacked symmetric 1x1 or 2x2 matrices."""
    n = S.shape[-1]
    if n == 1:
        return S[..., 0, :].copy()
    a, b, d = S[..., 0, 0], S[..., 0, 1], S[..., 1, 1]
    mean = 0.5 * (a + d)
    disc = np.hypot(0.5 * (a - d), b)
    det = a * d - b * b
    big = mean + np.sign(mean + (mean == 0)) * disc
    with np.errstate(divide="ignore", invalid="ignore"):
        other = np.where(big != 0.0, det / big, mean - disc)
    return np.sort(np.stack([big, other], axis=-1), axis=-1)


def _speed(H: FloatArray, mask: BoolArray, rho: float) -> FloatArray:
    safe = np.where(mask, H, 1.0)
    return np.where(mask, np.power(safe, rho), np.nan)


# =====================================================================
# Field bundles
# =====================================================================

@dataclass(frozen=True, eq=False)
class GeometryFields:
    """Every pointwise quantity of the graph at one instant."""
    rho: float
    Du: FloatArray
    D2u: FloatArray
    W: FloatArray
    nu: FloatArray
    g_lo: FloatArray
    g_up: FloatArray
    h: FloatArray
    H: FloatArray
    K: FloatArray
    lambdas: FloatArray
    F: FloatArray
    F_up: FloatArray
    mean_convex: BoolArray

    @property
    def v(self) -> FloatArray:
        return self.W

    @property
    def n(self) -> int:
        return self.Du.shape[-1]

    def columns(self) -> List[str]:
        n = self.n
        cols = [f"x{i + 1}" for i in range(n)] + ["u"]
        cols += [f"u_{i + 1}" for i in range(n)]
        cols += ["W", "H", "K"] + [f"lambda{i + 1}" for i in range(n)]
        cols += ["F", "mean_convex"]
        return cols

    def rows(self, u: GridFunction) -> List[List[CsvValue]]:
        """One row per node, matching columns()."""
        out: List[List[CsvValue]] = []
        for idx, point, value in u.iter_nodes():
            row: List[CsvValue] = list(point) + [value]
            row += [float(c) for c in self.Du[idx]]
            row += [float(self.W[idx]), float(self.H[idx]), float(self.K[idx])]
            row += [float(c) for c in self.lambdas[idx]]
            row += [float(self.F[idx]), bool(self.mean_convex[idx])]
            out.append(row)
        return out


@dataclass(frozen=True, eq=False)
class FlowFields:
    """What one solver step needs: W, H, F and the mask."""
    Du: FloatArray
    W: FloatArray
    H: FloatArray
    F: FloatArray
    mean_convex: BoolArray

    @property
    def speed(self) -> FloatArray:
        return self.W * self.F


def geometry_fields(u: GridFunction, rho: float) -> GeometryFields:
    if not rho > 0:
        raise ValueError(f"rho must be > 0, got {rho}")
    Du, D2u = derivatives(u)
    n = u.n
    eye = np.eye(n)
    outer = Du[..., :, None] * Du[..., None, :]
    q = np.sum(Du * Du, axis=-1)
    W = np.sqrt(1.0 + q)
    W2 = W[..., None, None]

    g_lo = eye + outer
    g_up = eye - outer / W2 ** 2
    h = D2u / W2
    H = np.einsum("...ij,...ij->...", h, g_up)
    K = np.linalg.det(h) / (W * W)

    A = eye - outer / (W * (W + 1.0))[..., None, None]
    S = A @ h @ A
    S = 0.5 * (S + np.swapaxes(S, -1, -2))
    lambdas = _sym_eigvals(S)

    mask = H > MEAN_CONVEXITY_THRESHOLD
    F = _speed(H, mask, rho)
    coeff = np.where(mask, rho * np.power(np.where(mask, H, 1.0), rho - 1.0), np.nan)
    F_up = coeff[..., None, None] * g_up

    return GeometryFields(
        rho=float(rho),
        Du=Du,
        D2u=D2u,
        W=W,
        nu=unit_normal(Du),
        g_lo=g_lo,
        g_up=g_up,
        h=h,
        H=H,
        K=K,
        lambdas=lambdas,
        F=F,
        F_up=F_up,
        mean_convex=mask,
    )


def flow_fields(u: GridFunction, rho: float) -> FlowFields:
    Du, D2u = derivatives(u)
    q = np.sum(Du * Du, axis=-1)
    W = np.sqrt(1.0 + q)
    lap = np.trace(D2u, axis1=-2, axis2=-1)
    quad = np.einsum("...i,...ij,...j->...", Du, D2u, Du)
    H = (lap - quad / (W * W)) / W
    mask = H > MEAN_CONVEXITY_THRESHOLD
    return FlowFields(Du=Du, W=W, H=H, F=_speed(H, mask, rho), mean_convex=mask)


# =====================================================================
# Speed in divergence form
# =====================================================================

def _flux_divergence(values: FloatArray, dx: float, Du: FloatArray) -> FloatArray:
    """div(Du/W) from face fluxes; NaN on the boundary."""
    n = values.ndim
    total = np.zeros(values.shape)
    for k in range(n):
        lo = [slice(None)] * n
        hi = [slice(None)] * n
        lo[k] = slice(0, -1)
        hi[k] = slice(1, None)
        lo_t, hi_t = tuple(lo), tuple(hi)
        comps = []
        for j in range(n):
            if j == k:
                comps.append((values[hi_t] - values[lo_t]) / dx)
            else:
                comps.append(0.5 * (Du[..., j][hi_t] + Du[..., j][lo_t]))
        W_face = np.sqrt(1.0 + sum(c * c for c in comps))
        flux = comps[k] / W_face
        inner = [slice(None)] * n
        inner[k] = slice(1, -1)
        part = np.full(values.shape, np.nan)
        part[tuple(inner)] = np.diff(flux, axis=k) / dx
        total = total + part
    interior = np.full(values.shape, np.nan)
    sl = (slice(1, -1),) * n
    interior[sl] = total[sl]
    return interior


def divergence_form_speed(
    u: GridFunction,
    rho: float,
    scheme: DivergenceScheme = DivergenceScheme.EXPANDED,
) -> FloatArray:
    """W * (div(Du/W))^rho; NaN where the divergence is not positive."""
    Du, D2u = derivatives(u)
    W = np.sqrt(1.0 + np.sum(Du * Du, axis=-1))
    if scheme is DivergenceScheme.EXPANDED:
        # d_i(u_i/W) = u_ii/W - u_i u_j u_ij / W^3
        lap = np.trace(D2u, axis1=-2, axis2=-1)
        quad = np.einsum("...i,...ij,...j->...", Du, D2u, Du)
        div = lap / W - quad / W ** 3
    elif scheme is DivergenceScheme.FLUX:
        div = _flux_divergence(np.asarray(u.values), u.dx, Du)
    else:
        raise ValueError(f"unknown divergence scheme: {scheme}")
    with np.errstate(invalid="ignore"):
        mask = div > MEAN_CONVEXITY_THRESHOLD
    return W * _speed(np.nan_to_num(div, nan=0.0), mask, rho)


# =====================================================================
# Tangent planes
# =====================================================================

def tangent_plane_distance(u: GridFunction, x: NodeIndex, x0: NodeIndex) -> float:
    """Distance from (x0, u(x0)) to the embedded tangent plane at (x, u(x))."""
    x, x0 = tuple(x), tuple(x0)
    if x == x0:
        raise ValueError("tangent plane distance needs two distinct nodes")
    Du, _ = derivatives(u)
    spec = u.spec
    p = Du[x]
    offset = np.subtract(spec.point_of(x0), spec.point_of(x))
    gap = u.at(x0) - u.at(x) - float(np.dot(p, offset))
    return abs(gap) / float(np.sqrt(1.0 + np.dot(p, p)))


def min_tangent_plane_distance(u: GridFunction, x0: Sequence[int], R: float) -> float:
    """Infimum over nodes x with |x| >= R, x != x0, of the tangent-plane distance to x0."""
    x0 = tuple(x0)
    spec = u.spec
    Du, _ = derivatives(u)
    coords = spec.coords()
    outside = spec.radius() >= R
    outside[x0] = False
    if not np.any(outside):
        raise ValueError(f"no grid nodes outside radius {R}")
    base = np.asarray(spec.point_of(x0))
    gap = u.at(x0) - u.values - np.sum(Du * (base - coords), axis=-1)
    dist = np.abs(gap) / np.sqrt(1.0 + np.sum(Du * Du, axis=-1))
    return float(np.min(dist[outside]))


__all__ = [
    "MEAN_CONVEXITY_THRESHOLD",
    "derivatives",
    "unit_normal",
    "GeometryFields",
    "FlowFields",
    "geometry_fields",
    "flow_fields",
    "divergence_form_speed",
    "tangent_plane_distance",
    "min_tangent_plane_distance",
]
