#!/usr/bin/env python3
"""
Pinned values and conventions.

Each test guards one decision that a plausible edit could silently undo:
the sphere curvature constant, the principal-minor convention and a few
hand-computed reference numbers.
"""

import math

import numpy as np
import pytest

from core.exact_solutions import SphereSolution, hemisphere_sphere, scenario, solve_barrier, sphere_radius
from core.grid import GridSpec
from diagnostics.evolution import evolution_identity_check
from diagnostics.harnack import concavity_matrix, dual_concavity_check, principal_minors
from flow_types import EvolutionIdentity, MinorConvention


class TestCurvatureConstant:
    """H = n/r on an n-sphere; n - 1 is kept only as an explicit option."""

    def test_default_is_dimension(self):
        assert SphereSolution((0.0, 0.0, 1.0), 1.0, 1.0, 2).c_H == 2.0

    def test_radius_for_unit_sphere(self):
        sphere = SphereSolution((0.0, 0.0, 1.0), 1.0, 1.0, 2)
        assert sphere_radius(sphere, 0.1) == pytest.approx(math.sqrt(0.6), rel=1e-15)

    def test_lowered_constant_breaks_the_speed_identity(self):
        sphere = SphereSolution((0.0, 0.0, 1.0), 1.0, 1.0, 2, c_H=1.0)
        res = evolution_identity_check(sphere, 0.5 * sphere.extinction_time, EvolutionIdentity.SPEED)
        # lhs / rhs = c_H / n
        assert res.residual == pytest.approx(0.5, rel=1e-6)

    @pytest.mark.parametrize("c_H, h", [(None, 100.15), (1.0, 99.95)])
    def test_barrier_height(self, c_H, h):
        barrier = solve_barrier(eps=1.0, r_eps=10.0, T=0.1, rho=1.0, n=2, c_H=c_H)
        assert barrier.h == pytest.approx(h, abs=1e-9)


class TestMinorConvention:
    def test_reference_matrix_and_minors(self):
        np.testing.assert_allclose(concavity_matrix(1.0, [1.0, 1.0]), [[1.0, -1.0], [-1.0, 1.0]], atol=1e-15)
        np.testing.assert_allclose(principal_minors(1.0, [1.0, 1.0]), [1.0, 0.0], atol=1e-15)

    def test_conventions_agree_when_leading_curvature_is_one(self):
        lam = [1.0, 3.0]
        np.testing.assert_allclose(
            principal_minors(1.0, lam, MinorConvention.DERIVED),
            principal_minors(1.0, lam, MinorConvention.PRINTED),
            atol=1e-14,
        )

    def test_printed_convention_mismatches_otherwise(self):
        lam = [[3.0, 0.7]]
        assert dual_concavity_check(2.0, lam).max_minor_error < 1e-12
        printed = dual_concavity_check(2.0, lam, MinorConvention.PRINTED, check_hessian=False)
        assert printed.max_minor_error > 1.0


class TestReferenceNumbers:
    def test_cap_height_at_grid_edge(self):
        sphere = hemisphere_sphere(2.0, 1.0, 1)
        assert sphere.center == (0.0, 2.0)
        u = scenario("hemisphere", GridSpec(1, 1.0, 0.5), 2.0)
        assert u.values[-1] == pytest.approx(2.0 - math.sqrt(3.0), abs=1e-15)

    def test_smoothed_cone_offset(self):
        u = scenario("smoothed_cone", GridSpec(2, 1.0, 0.5), 0.05)
        # node (1, 0): within mu log 4 of max |x_i|
        value = u.values[4, 2]
        assert 1.0 <= value <= 1.0 + 0.05 * math.log(4.0) + 1e-15
        assert abs(value - 1.0) < 0.1
