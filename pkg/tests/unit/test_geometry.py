#!/usr/bin/env python3
import numpy as np
import pytest

from core.geometry import (
    derivatives,
    divergence_form_speed,
    flow_fields,
    geometry_fields,
    min_tangent_plane_distance,
    tangent_plane_distance,
    unit_normal,
)
from core.grid import GridSpec
from flow_types import DivergenceScheme


def _quadratic(spec: GridSpec, Q: np.ndarray):
    """u = x^T Q x / 2 on the grid."""
    return spec.sample(lambda x: 0.5 * np.einsum("...i,ij,...j->...", x, Q, x))


class TestDerivatives:
    def test_exact_on_quadratics_including_edges(self):
        Q = np.array([[2.0, 0.5], [0.5, 4.0]])
        spec = GridSpec(2, 1.0, 0.1)
        Du, D2u = derivatives(_quadratic(spec, Q))
        expected = np.einsum("ij,...j->...i", Q, spec.coords())
        np.testing.assert_allclose(Du, expected, atol=1e-10)
        np.testing.assert_allclose(D2u, np.broadcast_to(Q, D2u.shape), atol=1e-8)

    def test_mixed_derivatives_are_symmetric_bitwise(self):
        spec = GridSpec(2, 1.0, 0.1)
        u = spec.sample(lambda x: np.exp(0.3 * x[..., 0]) * np.cosh(x[..., 1]))
        _, D2u = derivatives(u)
        assert np.array_equal(D2u[..., 0, 1], D2u[..., 1, 0])

    def test_unit_normal_points_down(self):
        Du = np.array([[0.0], [3.0], [-4.0]])
        nu = unit_normal(Du)
        np.testing.assert_allclose(np.linalg.norm(nu, axis=-1), 1.0)
        assert np.all(nu[:, -1] < 0)
        np.testing.assert_allclose(nu[1], [3.0 / np.sqrt(10.0), -1.0 / np.sqrt(10.0)])


class TestGeometryFields:
    def test_paraboloid_vertex(self):
        spec = GridSpec(2, 1.0, 0.1)
        fields = geometry_fields(spec.sample(lambda x: np.sum(x * x, axis=-1)), 1.0)
        origin = spec.node_at((0.0, 0.0))
        assert fields.W[origin] == pytest.approx(1.0)
        assert fields.H[origin] == pytest.approx(4.0)
        assert fields.K[origin] == pytest.approx(4.0)
        np.testing.assert_allclose(fields.lambdas[origin], [2.0, 2.0])

    def test_one_dimensional_closed_form(self):
        a = 0.7
        spec = GridSpec(1, 2.0, 0.05)
        x = spec.axis
        fields = geometry_fields(spec.sample(lambda p: a * p[..., 0] ** 2), 2.0)
        W = np.sqrt(1.0 + (2.0 * a * x) ** 2)
        H = 2.0 * a / W ** 3
        np.testing.assert_allclose(fields.H, H, rtol=1e-9)
        np.testing.assert_allclose(fields.lambdas[..., 0], H, rtol=1e-9)
        np.testing.assert_allclose(fields.F, H ** 2, rtol=1e-9)

    def test_invariants_of_a_general_quadratic(self):
        Q = np.array([[2.0, 0.5], [0.5, 4.0]])
        spec = GridSpec(2, 1.0, 0.1)
        fields = geometry_fields(_quadratic(spec, Q), 0.5)
        inner = spec.interior()
        Du = np.einsum("ij,...j->...i", Q, spec.coords())
        W = np.sqrt(1.0 + np.sum(Du * Du, axis=-1))
        quad = np.einsum("...i,ij,...j->...", Du, Q, Du)
        H = (np.trace(Q) - quad / W ** 2) / W
        K = np.linalg.det(Q) / W ** 4
        np.testing.assert_allclose(fields.H[inner], H[inner], rtol=1e-8)
        np.testing.assert_allclose(fields.K[inner], K[inner], rtol=1e-8)
        lam = fields.lambdas[inner]
        np.testing.assert_allclose(lam.sum(axis=-1), H[inner], rtol=1e-8)
        np.testing.assert_allclose(lam.prod(axis=-1), K[inner], rtol=1e-8)
        assert np.all(lam[..., 0] <= lam[..., 1])

    def test_metric_and_inverse(self):
        spec = GridSpec(2, 1.0, 0.25)
        fields = geometry_fields(spec.sample(lambda x: np.sum(x * x, axis=-1)), 1.0)
        prod = fields.g_lo @ fields.g_up
        np.testing.assert_allclose(prod, np.broadcast_to(np.eye(2), prod.shape), atol=1e-12)

    def test_flat_nodes_are_masked(self):
        spec = GridSpec(1, 1.0, 0.1)
        fields = geometry_fields(spec.sample(lambda x: 0.5 * x[..., 0]), 1.0)
        assert not fields.mean_convex.any()
        assert np.all(np.isnan(fields.F))

    def test_invalid_rho(self):
        with pytest.raises(ValueError):
            geometry_fields(GridSpec(1, 1.0, 0.1).sample(lambda x: x[..., 0] ** 2), 0.0)

    def test_csv_rows_match_columns(self):
        spec = GridSpec(2, 1.0, 0.5)
        u = spec.sample(lambda x: np.sum(x * x, axis=-1))
        fields = geometry_fields(u, 1.0)
        cols = fields.columns()
        rows = fields.rows(u)
        assert cols[:3] == ["x1", "x2", "u"] and cols[-1] == "mean_convex"
        assert len(rows) == 25 and all(len(r) == len(cols) for r in rows)


class TestSymmetries:
    @pytest.mark.parametrize("fn", [
        lambda x: np.sum(x * x, axis=-1) + 0.5 * np.sum(x * x, axis=-1) ** 2,
        lambda x: x[..., 0] ** 2 + 2.0 * x[..., 1] ** 2 + 0.3 * x[..., 0] * x[..., 1] + 0.1 * x[..., 0] ** 4,
    ])
    def test_quarter_turn_permutes_scalar_fields(self, fn):
        spec = GridSpec(2, 1.0, 0.05)
        u = spec.sample(fn)
        turned = u.with_values(np.rot90(u.values).copy(), u.t)
        a = geometry_fields(u, 1.5)
        b = geometry_fields(turned, 1.5)
        for name in ("H", "K", "F", "W"):
            np.testing.assert_allclose(getattr(b, name), np.rot90(getattr(a, name)), rtol=1e-10, atol=1e-12,
                                       err_msg=name)
        np.testing.assert_allclose(b.lambdas, np.rot90(a.lambdas), rtol=1e-9, atol=1e-12)

    def test_speed_increases_with_rho_where_curvature_exceeds_one(self):
        spec = GridSpec(2, 1.5, 0.05)
        u = spec.sample(lambda x: np.sum(x * x, axis=-1))
        inner = spec.interior()
        H = geometry_fields(u, 1.0).H[inner]
        steep, flat = H > 1.0 + 1e-9, H < 1.0 - 1e-9
        assert np.any(steep) and np.any(flat)
        speeds = [geometry_fields(u, rho).F[inner] for rho in (0.5, 1.0, 2.0, 4.0)]
        for lo, hi in zip(speeds, speeds[1:]):
            assert np.all(lo[steep] < hi[steep])
            assert np.all(lo[flat] > hi[flat])


class TestSpeeds:
    def test_flow_fields_agree_with_full_fields(self):
        spec = GridSpec(2, 1.0, 0.1)
        u = spec.sample(lambda x: np.sum(x * x, axis=-1) + 0.1 * x[..., 0] ** 4)
        full = geometry_fields(u, 1.5)
        light = flow_fields(u, 1.5)
        np.testing.assert_allclose(light.H, full.H, rtol=1e-10)
        np.testing.assert_allclose(light.speed, full.W * full.F, rtol=1e-10)

    def test_expanded_divergence_matches_speed(self):
        spec = GridSpec(2, 1.0, 0.05)
        u = spec.sample(lambda x: np.sum(x * x, axis=-1) + 0.2 * x[..., 0] ** 4)
        full = geometry_fields(u, 2.0)
        speed = divergence_form_speed(u, 2.0)
        inner = spec.interior()
        np.testing.assert_allclose(speed[inner], (full.W * full.F)[inner], rtol=1e-8)

    def test_flux_divergence_is_second_order(self):
        errors = []
        for dx in (0.1, 0.05):
            spec = GridSpec(1, 1.0, dx)
            u = spec.sample(lambda x: np.cosh(x[..., 0]))
            exact = flow_fields(u, 1.0).speed
            flux = divergence_form_speed(u, 1.0, DivergenceScheme.FLUX)
            assert np.all(np.isnan(flux[[0, -1]]))
            errors.append(float(np.max(np.abs(flux[1:-1] - exact[1:-1]))))
        assert errors[1] < errors[0] / 3.0


class TestTangentPlanes:
    def test_distance_on_a_parabola(self):
        spec = GridSpec(1, 2.0, 0.1)
        u = spec.sample(lambda x: x[..., 0] ** 2)
        d = tangent_plane_distance(u, spec.node_at((1.0,)), spec.node_at((0.0,)))
        assert d == pytest.approx(1.0 / np.sqrt(5.0), rel=1e-9)

    def test_same_node_rejected(self):
        spec = GridSpec(1, 2.0, 0.1)
        u = spec.sample(lambda x: x[..., 0] ** 2)
        with pytest.raises(ValueError):
            tangent_plane_distance(u, (3,), (3,))

    def test_infimum_positive_for_convex_data(self):
        spec = GridSpec(2, 2.0, 0.1)
        u = spec.sample(lambda x: np.sum(x * x, axis=-1))
        assert min_tangent_plane_distance(u, spec.node_at((0.0, 0.0)), 1.0) > 0.0
        with pytest.raises(ValueError):
            min_tangent_plane_distance(u, spec.node_at((0.0, 0.0)), 10.0)
