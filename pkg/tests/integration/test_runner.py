#!/usr/bin/env python3
import orjson
import pytest

from app.config import HarnackRequest, RunConfig, parse_config
from app.runner import DIAGNOSTICS, run_command
from core.errors import ConfigError
from flow_types import BoundaryKind, ProfileExpectation
from gen.csv.writer import read_csv


def _paraboloid_config(**overrides) -> RunConfig:
    values = dict(
        scenario="paraboloid", rho=1.0, n=1, half_width=2.0, dx=0.04, t_end=0.02,
        snapshot_every=0.005,
        diagnostics=["nu_profile", "nu_preservation", "harnack", "velocity_floor", "normal_image",
                     "dual_concavity", "evolution_identity", "steps", "geometry"],
        nu_radii=[1.0, 2.0, 4.0],
        harnack=[HarnackRequest((0.0, -1.0), 0.01, 0.02)],
        velocity_floor_x=[0.5],
        dual_samples=50,
        identity_samples=5,
        plots=True,
    )
    values.update(overrides)
    return RunConfig(**values)


def test_every_diagnostic_is_registered():
    from app.config import KNOWN_DIAGNOSTICS
    assert set(DIAGNOSTICS) == set(KNOWN_DIAGNOSTICS)


def test_empty_diagnostics_writes_only_the_trajectory(tmp_path):
    cfg = RunConfig(t_end=0.01, dx=0.05)
    outcome = run_command(cfg, tmp_path)
    assert outcome.exit_code == 0
    assert outcome.files == [tmp_path / "trajectory.csv"]
    assert sorted(p.name for p in tmp_path.iterdir()) == ["trajectory.csv"]
    header, rows = read_csv(tmp_path / "trajectory.csv")
    assert header[0] == "t"
    assert float(rows[-1][0]) == pytest.approx(0.01)


def test_paraboloid_run_passes(tmp_path):
    outcome = run_command(_paraboloid_config(), tmp_path)
    assert outcome.exit_code == 0, [(r.name, r.summary) for r in outcome.results if r.passed is False]
    names = {p.name for p in outcome.files}
    for diag in ("nu_profile", "harnack", "dual_concavity", "steps", "geometry"):
        assert f"{diag}.csv" in names
    assert "nu_profile.svg" in names and "geometry.svg" in names
    assert "harnack.svg" not in names
    summary = orjson.loads((tmp_path / "summary.json").read_bytes())
    assert summary["passed"] is True
    assert summary["scenario"] == "paraboloid"
    assert summary["final_time"] == pytest.approx(0.02)
    assert summary["diagnostics"]["steps"]["passed"] is None
    assert summary["diagnostics"]["harnack"]["passed"] is True


def test_duplicate_diagnostics_run_once(tmp_path):
    outcome = run_command(_paraboloid_config(diagnostics=["steps", "steps"], plots=False), tmp_path)
    assert [r.name for r in outcome.results] == ["steps"]


def test_cone_fails_the_decay_assertion(tmp_path):
    cfg = RunConfig(
        scenario="smoothed_cone(0.1)", n=2, half_width=2.0, dx=0.05, t_end=0.001,
        diagnostics=["nu_profile"], nu_radii=[1.0, 2.0, 3.0], nu_expect=ProfileExpectation.DECAY,
    )
    outcome = run_command(cfg, tmp_path)
    assert outcome.exit_code == 1
    (result,) = outcome.results
    assert result.passed is False
    summary = orjson.loads((tmp_path / "summary.json").read_bytes())
    assert summary["passed"] is False
    assert all(e >= 0.5 for e in summary["diagnostics"]["nu_profile"]["eps_initial"])


def test_outputs_are_byte_reproducible(tmp_path):
    one, two = tmp_path / "one", tmp_path / "two"
    first = run_command(_paraboloid_config(), one)
    second = run_command(_paraboloid_config(threads=3), two)
    assert [p.name for p in first.files] == [p.name for p in second.files]
    for a, b in zip(first.files, second.files):
        assert a.read_bytes() == b.read_bytes(), a.name


def test_cap_run_with_barrier_boundary(tmp_path):
    cfg = parse_config(
        "scenario = hemisphere(2)\nL = 0.5\ndx = 0.02\nt_end = 0.005\nboundary = barrier\n"
        "diagnostics = steps, geometry\n"
    )
    assert cfg.boundary is BoundaryKind.BARRIER
    outcome = run_command(cfg, tmp_path)
    assert outcome.exit_code == 0
    assert outcome.trajectory.final.t == pytest.approx(0.005)


def test_diagnostic_times_off_the_cadence_get_snapshots(tmp_path):
    cfg = parse_config(
        "L = 2\ndx = 0.04\nt_end = 0.04\n"
        "diagnostics = harnack, c2_monitor\n"
        "harnack = 0, -1 | 0.01 | 0.04\n"
        "c2_seed = 1.5\nc2_offset = 0.004\n"
    )
    assert cfg.snapshot_every is None
    outcome = run_command(cfg, tmp_path)
    assert outcome.trajectory.times == pytest.approx([0.0, 0.01, 0.04])
    harnack, c2 = outcome.results
    assert harnack.passed is True
    assert [row[cfg.n + 1] for row in harnack.rows] == pytest.approx([0.01])
    assert c2.summary["first_quarter_peak"] > 0


def test_invalid_config_is_rejected(tmp_path):
    with pytest.raises(ConfigError):
        run_command(RunConfig(scenario="paraboloid", dx=0.03), tmp_path)
