#!/usr/bin/env python3
import random

import pytest

from app.config import DEFAULT_CONFIG, HarnackRequest, RunConfig, emit_config, parse_config
from core.errors import ConfigError
from flow_types import BoundaryKind, ProfileExpectation, TimeStepKind


def _issues(text: str):
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text)
    return excinfo.value.issues


class TestParse:
    def test_minimal(self):
        cfg = parse_config("scenario = paraboloid\nrho = 2\n")
        assert cfg.rho == 2.0
        assert cfg.n == 1
        assert cfg.boundary is BoundaryKind.EXTRAPOLATE
        assert cfg.diagnostics == []

    def test_empty_text_gives_defaults(self):
        assert parse_config("") == DEFAULT_CONFIG

    def test_comments_and_blank_lines(self):
        cfg = parse_config("# run\n\nL = 3   # wider\ndx = 0.05\n")
        assert cfg.half_width == 3.0
        assert cfg.dx == 0.05

    def test_enums_and_lists(self):
        cfg = parse_config(
            "time_step = FIXED\ndt = 0.0001\nboundary = frozen\nnu_expect = decay\n"
            "nu_radii = 1, 2.5, 4\ndiagnostics = nu_profile, steps\n"
        )
        assert cfg.time_step is TimeStepKind.FIXED
        assert cfg.boundary is BoundaryKind.FROZEN
        assert cfg.nu_expect is ProfileExpectation.DECAY
        assert cfg.nu_radii == [1.0, 2.5, 4.0]
        assert cfg.diagnostics == ["nu_profile", "steps"]

    def test_harnack_lines_repeat(self):
        cfg = parse_config(
            "t_end = 0.04\ndiagnostics = harnack\n"
            "harnack = 0, -1 | 0.01 | 0.04\nharnack = 0.6, -0.8 | 0.02 | 0.03\n"
        )
        assert cfg.harnack == [
            HarnackRequest((0.0, -1.0), 0.01, 0.04),
            HarnackRequest((0.6, -0.8), 0.02, 0.03),
        ]

    @pytest.mark.parametrize("text, expected", [("true", True), ("TRUE", True), ("false", False)])
    def test_booleans(self, text, expected):
        assert parse_config(f"plots = {text}\n").plots is expected

    def test_derived_defaults(self):
        cfg = parse_config("n = 2\ndx = 0.1\nt_end = 0.03\n")
        assert cfg.c2_seed_point == (0.0, 0.0)
        assert cfg.velocity_floor_time == 0.03
        assert cfg.normal_image_time == 0.03
        assert cfg.initial_datum().values.shape == (41, 41)

    def test_snapshot_times_follow_enabled_diagnostics(self):
        cfg = parse_config(
            "t_end = 0.04\n"
            "diagnostics = harnack, c2_monitor, velocity_floor\n"
            "harnack = 0, -1 | 0.01 | 0.03\n"
            "velocity_floor_t = 0.02\n"
        )
        assert cfg.snapshot_times() == pytest.approx([0.01, 0.02, 0.03])

    def test_snapshot_times_ignore_disabled_diagnostics(self):
        cfg = parse_config("t_end = 0.04\nharnack = 0, -1 | 0.01 | 0.03\n")
        assert cfg.snapshot_times() == []


class TestErrors:
    def test_negative_rho_reports_its_line(self):
        issues = _issues("scenario = paraboloid\nrho = -1\n")
        assert len(issues) == 1
        assert issues[0].line == 2
        assert issues[0].key == "rho"
        assert "rho must be > 0" in str(issues[0])

    def test_every_problem_is_collected(self):
        issues = _issues("colour = blue\nrho = 1\nrho = 2\nplots = yes\nnot a pair\n")
        assert [i.line for i in issues] == [1, 3, 4, 5]
        assert "unknown key" in issues[0].message
        assert "duplicate key" in issues[1].message
        assert "expected true or false" in issues[2].message

    @pytest.mark.parametrize("text, key", [
        ("dx = 0.03\n", "dx"),
        ("time_step = fixed\n", "time_step"),
        ("boundary = barrier\n", "boundary"),
        ("scenario = cube\n", "scenario"),
        ("diagnostics = harnack\n", "harnack"),
        ("harnack = 0, 0, -1 | 0.01 | 0.02\n", "harnack"),
        ("diagnostics = nested_domains\n", "nested_domains"),
        ("nested_domains = 2, 1\n", "nested_domains"),
        ("normal_image_R = 2\n", "normal_image_R"),
        ("c2_seed = 5\n", "c2_seed"),
        ("snapshot_every = 1\n", "snapshot_every"),
        ("diagnostics = everything\n", "diagnostics"),
    ])
    def test_invalid(self, text, key):
        issues = _issues(text)
        assert key in [i.key for i in issues]

    def test_error_details_are_structured(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config("rho = 0\n")
        details = excinfo.value.details()
        assert details["error"] == "ConfigError"
        assert details["issues"] == [{"line": 1, "key": "rho", "message": "rho must be > 0"}]

    def test_config_error_is_a_value_error(self):
        with pytest.raises(ValueError):
            parse_config("rho = nan\n")


class TestRoundTrip:
    def test_defaults(self):
        assert parse_config(emit_config(DEFAULT_CONFIG)) == DEFAULT_CONFIG

    def test_random_configs(self):
        rng = random.Random(20240611)
        diagnostics = ["nu_profile", "nu_preservation", "c2_monitor", "velocity_floor",
                       "normal_image", "dual_concavity", "evolution_identity", "steps", "geometry"]
        for _ in range(100):
            n = rng.choice([1, 2])
            dx = rng.choice([0.05, 0.1, 0.25]) if n == 2 else rng.choice([0.01, 0.02, 0.05, 0.1])
            t_end = rng.uniform(0.001, 1.0)
            cfg = RunConfig(
                scenario=rng.choice(["paraboloid", "scaled_paraboloid(0.5)", "smoothed_cone(0.1)"]),
                rho=rng.uniform(0.1, 5.0),
                n=n,
                half_width=2.0,
                dx=dx,
                t_end=t_end,
                safety=rng.uniform(0.1, 1.0),
                boundary=rng.choice([BoundaryKind.FROZEN, BoundaryKind.EXTRAPOLATE]),
                snapshot_every=rng.choice([None, t_end / 4]),
                diagnostics=rng.sample(diagnostics, rng.randint(0, len(diagnostics))),
                nu_expect=rng.choice(list(ProfileExpectation)),
                nu_stride=rng.choice([None, 1, 3]),
                c2_beta=rng.uniform(1.5, 4.0),
                c2_seed=[rng.uniform(-1.0, 1.0) for _ in range(n)],
                harnack=[HarnackRequest(tuple(rng.uniform(-1, 1) for _ in range(n)) + (-1.0,), t_end / 2, t_end)],
                dual_samples=rng.randint(1, 5000),
                plots=rng.random() < 0.5,
                seed=rng.randint(0, 2 ** 31),
                threads=rng.randint(1, 8),
            )
            assert parse_config(emit_config(cfg)) == cfg

    def test_emitted_text_layout(self):
        text = emit_config(RunConfig(plots=True, harnack=[HarnackRequest((0.0, -1.0), 0.01, 0.05)]))
        assert "L = 2.0\n" in text
        assert "plots = true\n" in text
        assert "harnack = 0.0, -1.0 | 0.01 | 0.05\n" in text
        assert "dt = " not in text
        assert text.endswith("\n")
