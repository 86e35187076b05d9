#!/usr/bin/env python3
import numpy as np
import pytest

from core.errors import PatchInvalid
from core.exact_solutions import hemisphere_sphere, scenario
from core.grid import GridSpec
from core.solver import FlowParams, cap_trajectory, run
from diagnostics.c2_estimates import C2Monitor, Patch, PatchFrame, c2_closed_form, c2_monitor, patch_maximum


def _cap_trajectory(dx: float, times):
    sphere = hemisphere_sphere(2.0, 1.0, 1)
    params = FlowParams(rho=1.0, n=1, half_width=0.5, dx=dx, t_end=float(times[-1]))
    return sphere, cap_trajectory(sphere, times, params.grid_spec, params)


class TestPatch:
    @pytest.mark.parametrize("offset, G", [(0.0, 0.5), (0.1, 0.0)])
    def test_invalid(self, offset, G):
        with pytest.raises(ValueError):
            Patch((0.0,), offset, G)

    def test_frame_at_the_vertex(self):
        u = scenario("paraboloid", GridSpec(1, 1.0, 0.05))
        frame = PatchFrame.from_graph(u, Patch((0.0,), 0.01, 0.5))
        np.testing.assert_allclose(frame.origin, [0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(frame.normal, [0.0, -1.0], atol=1e-12)
        with pytest.raises(ValueError):
            PatchFrame.from_graph(u, Patch((3.0,), 0.01, 0.5))


class TestMonitor:
    def test_cap_matches_closed_form(self):
        times = np.linspace(0.0, 0.01, 5)
        sphere, traj = _cap_trajectory(0.01, times)
        mon = c2_monitor(traj, 2.0, Patch((0.0,), 0.02, 0.5))
        exact = [c2_closed_form(sphere, t, 2.0, 0.02, 0.5) for t in mon.times]
        np.testing.assert_allclose(mon.unweighted, exact, rtol=1e-3)
        assert mon.weighted[0] == 0.0
        assert all(k > 0 for k in mon.patch_nodes)

    def test_cap_error_shrinks_quadratically(self):
        times = np.linspace(0.0, 0.01, 3)
        errors = []
        for dx in (0.02, 0.01):
            sphere, traj = _cap_trajectory(dx, times)
            mon = c2_monitor(traj, 2.0, Patch((0.0,), 0.02, 0.5))
            exact = [c2_closed_form(sphere, t, 2.0, 0.02, 0.5) for t in mon.times]
            errors.append(max(abs(a - b) for a, b in zip(mon.unweighted, exact)))
        assert errors[0] / errors[1] > 3.0

    def test_paraboloid_is_not_flagged(self):
        params = FlowParams(rho=1.0, n=1, half_width=2.0, dx=0.02, t_end=0.05)
        traj = run(scenario("paraboloid", params.grid_spec), params, snapshot_every=0.0025)
        mon = c2_monitor(traj, 2.0, Patch((1.5,), 0.004, 0.5))
        assert not mon.flagged and mon.passed
        assert len(mon.rows()) == len(traj.snapshots)

    def test_beta_must_exceed_one(self):
        _, traj = _cap_trajectory(0.05, [0.0, 0.01])
        with pytest.raises(ValueError):
            c2_monitor(traj, 1.0, Patch((0.0,), 0.02, 0.5))

    def test_patch_reaching_the_boundary_is_invalid(self):
        _, traj = _cap_trajectory(0.05, [0.0, 0.01])
        with pytest.raises(PatchInvalid):
            c2_monitor(traj, 2.0, Patch((0.0,), 0.5, 0.5))

    def test_steep_patch_is_invalid(self):
        _, traj = _cap_trajectory(0.05, [0.0, 0.01])
        u = traj.initial
        patch = Patch((0.0,), 0.05, 0.01)
        with pytest.raises(PatchInvalid):
            patch_maximum(u, PatchFrame.from_graph(u, patch), patch, 2.0, 1.0)

    def test_growth_flag(self):
        patch = Patch((0.0,), 0.1, 0.5)
        mon = C2Monitor(2.0, patch, [0.0, 0.25, 0.5, 1.0], [0.0, 1.0, 2.0, 4.0], [0.0, 4.0, 4.0, 4.0], [1, 1, 1, 1])
        assert mon.first_quarter_max() == 1.0
        assert mon.flagged and not mon.passed
        lone = C2Monitor(2.0, patch, [0.0, 1.0], [0.0, 1.0], [0.0, 1.0], [1, 1])
        with pytest.raises(ValueError):
            lone.first_quarter_max()


class TestClosedForm:
    def test_pole_dominates_a_shallow_patch(self):
        sphere = hemisphere_sphere(2.0, 1.0, 1)
        value = c2_closed_form(sphere, 0.0, 2.0, 0.02)
        assert value == pytest.approx(0.02 * 0.5 * np.exp(2.0), rel=1e-9)

    def test_patch_above_the_cap_is_empty(self):
        sphere = hemisphere_sphere(2.0, 1.0, 1)
        t = 0.9 * sphere.extinction_time
        assert c2_closed_form(sphere, t, 2.0, 0.01) == 0.0
