#!/usr/bin/env python3
"""Run configuration: line-based parsing, validation and emission of RunConfig."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, MISSING
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from core.errors import ConfigError, ConfigIssue, FlowError
from core.exact_solutions import SphereSolution, hemisphere_sphere, parse_scenario, scenario
from core.grid import GridFunction, GridSpec
from core.solver import BoundaryPolicy, FlowParams, TimeStepPolicy
from flow_types import BoundaryKind, ProfileExpectation, TimeStepKind


KNOWN_DIAGNOSTICS = (
    "nu_profile",
    "nu_preservation",
    "c2_monitor",
    "harnack",
    "velocity_floor",
    "normal_image",
    "dual_concavity",
    "evolution_identity",
    "nested_domains",
    "steps",
    "geometry",
)


@dataclass
class PlotLayout:
    width: int = 800
    height: int = 600
    margin_left: int = 80
    margin_right: int = 30
    margin_top: int = 50
    margin_bottom: int = 60
    ticks: int = 5
    font_size: int = 12
    stroke_width: float = 1.5
    palette: Tuple[str, ...] = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

    @property
    def plot_width(self) -> int:
        return self.width - self.margin_left - self.margin_right

    @property
    def plot_height(self) -> int:
        return self.height - self.margin_top - self.margin_bottom

    def color(self, index: int) -> str:
        return self.palette[index % len(self.palette)]


@dataclass(frozen=True)
class HarnackRequest:
    direction: Tuple[float, ...]
    t1: float
    t2: float


# ===== VALUE PARSERS =====

def _number(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"expected a finite number, got {text!r}")
    return value


def _integer(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"expected an integer, got {text!r}") from None


def _boolean(text: str) -> bool:
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    raise ValueError(f"expected true or false, got {text!r}")


def _numbers(text: str) -> List[float]:
    return [_number(part.strip()) for part in text.split(",") if part.strip()]


def _names(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _choice(enum_type) -> Callable[[str], Any]:
    def parse(text: str):
        try:
            return enum_type(text.lower())
        except ValueError:
            options = "|".join(e.value for e in enum_type)
            raise ValueError(f"expected one of {options}, got {text!r}") from None
    return parse


def _harnack(text: str) -> HarnackRequest:
    parts = [p.strip() for p in text.split("|")]
    if len(parts) != 3:
        raise ValueError(f"expected 'p1, ..., p(n+1) | t1 | t2', got {text!r}")
    return HarnackRequest(tuple(_numbers(parts[0])), _number(parts[1]), _number(parts[2]))


def _scenario(text: str) -> str:
    parse_scenario(text)
    return text


# ===== VALUE EMITTERS =====

def _emit_number(v: float) -> str:
    return repr(float(v))


def _emit_numbers(vs: Sequence[float]) -> str:
    return ", ".join(repr(float(v)) for v in vs)


def _emit_harnack(h: HarnackRequest) -> str:
    return f"{_emit_numbers(h.direction)} | {_emit_number(h.t1)} | {_emit_number(h.t2)}"


def _positive(name: str) -> Callable[[Any], Optional[str]]:
    return lambda v: None if v > 0 else f"{name} must be > 0"


def _option(default: Any = MISSING, *, parse: Callable[[str], Any], emit: Callable[[Any], str] = str,
            check: Optional[Callable[[Any], Optional[str]]] = None, key: Optional[str] = None,
            factory: Any = MISSING, repeat: bool = False):
    meta = {"parse": parse, "emit": emit, "check": check, "key": key, "repeat": repeat}
    if factory is not MISSING:
        return field(default_factory=factory, metadata=meta)
    return field(default=default, metadata=meta)


@dataclass
class RunConfig:
    # ===== RUN SETUP =====
    scenario: str = _option("paraboloid", parse=_scenario)
    rho: float = _option(1.0, parse=_number, emit=_emit_number, check=_positive("rho"))
    n: int = _option(1, parse=_integer, check=lambda v: None if v in (1, 2) else "n must be 1 or 2")
    half_width: float = _option(2.0, parse=_number, emit=_emit_number, check=_positive("L"), key="L")
    dx: float = _option(0.02, parse=_number, emit=_emit_number, check=_positive("dx"))
    t_end: float = _option(0.05, parse=_number, emit=_emit_number, check=_positive("t_end"))
    time_step: TimeStepKind = _option(TimeStepKind.CFL, parse=_choice(TimeStepKind), emit=lambda e: e.value)
    dt: Optional[float] = _option(None, parse=_number, emit=_emit_number, check=_positive("dt"))
    safety: float = _option(
        0.9, parse=_number, emit=_emit_number,
        check=lambda v: None if 0 < v <= 1 else "safety must be in (0, 1]",
    )
    boundary: BoundaryKind = _option(BoundaryKind.EXTRAPOLATE, parse=_choice(BoundaryKind), emit=lambda e: e.value)
    convexity_floor: float = _option(
        1e-12, parse=_number, emit=_emit_number,
        check=lambda v: None if v >= 0 else "convexity_floor must be >= 0",
    )
    snapshot_every: Optional[float] = _option(None, parse=_number, emit=_emit_number, check=_positive("snapshot_every"))

    # ===== DIAGNOSTICS =====
    diagnostics: List[str] = _option(
        parse=_names, emit=", ".join, factory=list,
        check=lambda vs: next((f"unknown diagnostic {v!r}" for v in vs if v not in KNOWN_DIAGNOSTICS), None),
    )
    nu_radii: List[float] = _option(
        parse=_numbers, emit=_emit_numbers, factory=lambda: [2.0, 5.0, 10.0],
        check=lambda vs: None if vs and vs[0] > 0 and all(b > a for a, b in zip(vs, vs[1:]))
        else "nu_radii must be positive and strictly increasing",
    )
    nu_expect: ProfileExpectation = _option(ProfileExpectation.NONE, parse=_choice(ProfileExpectation),
                                            emit=lambda e: e.value)
    nu_pair_distance: float = _option(1.0, parse=_number, emit=_emit_number, check=_positive("nu_pair_distance"))
    nu_stride: Optional[int] = _option(None, parse=_integer, check=_positive("nu_stride"))
    c2_beta: float = _option(2.0, parse=_number, emit=_emit_number,
                             check=lambda v: None if v > 1 else "c2_beta must be > 1")
    c2_G: float = _option(0.5, parse=_number, emit=_emit_number, check=_positive("c2_G"))
    c2_seed: Optional[List[float]] = _option(None, parse=_numbers, emit=_emit_numbers)
    c2_offset: float = _option(0.02, parse=_number, emit=_emit_number, check=_positive("c2_offset"))
    harnack: List[HarnackRequest] = _option(parse=_harnack, emit=_emit_harnack, factory=list, repeat=True)
    velocity_floor_x: Optional[List[float]] = _option(None, parse=_numbers, emit=_emit_numbers)
    velocity_floor_t: Optional[float] = _option(None, parse=_number, emit=_emit_number,
                                                check=_positive("velocity_floor_t"))
    normal_image_r: float = _option(0.5, parse=_number, emit=_emit_number, check=_positive("normal_image_r"))
    normal_image_R: float = _option(1.5, parse=_number, emit=_emit_number, check=_positive("normal_image_R"))
    normal_image_T: Optional[float] = _option(None, parse=_number, emit=_emit_number,
                                              check=lambda v: None if v >= 0 else "normal_image_T must be >= 0")
    dual_samples: int = _option(1000, parse=_integer, check=_positive("dual_samples"))
    identity_samples: int = _option(50, parse=_integer, check=_positive("identity_samples"))
    nested_domains: List[float] = _option(parse=_numbers, emit=_emit_numbers, factory=list)

    # ===== OUTPUT =====
    plots: bool = _option(False, parse=_boolean, emit=lambda b: "true" if b else "false")
    output: str = _option("output", parse=str)
    seed: int = _option(0, parse=_integer, check=lambda v: None if v >= 0 else "seed must be >= 0")
    threads: int = _option(1, parse=_integer, check=_positive("threads"))

    # ----- derived values -----

    @property
    def grid_spec(self) -> GridSpec:
        return GridSpec(self.n, self.half_width, self.dx)

    def barrier_sphere(self) -> Optional[SphereSolution]:
        name, args = parse_scenario(self.scenario)
        if name != "hemisphere":
            return None
        return hemisphere_sphere(args[0], self.rho, self.n)

    def flow_params(self) -> FlowParams:
        policy = TimeStepPolicy(self.time_step, self.dt, self.safety)
        barrier = self.barrier_sphere() if self.boundary is BoundaryKind.BARRIER else None
        return FlowParams(
            rho=self.rho, n=self.n, half_width=self.half_width, dx=self.dx, t_end=self.t_end,
            time_step=policy, boundary=BoundaryPolicy(self.boundary, barrier),
            convexity_floor=self.convexity_floor,
        )

    def initial_datum(self) -> GridFunction:
        name, args = parse_scenario(self.scenario)
        return scenario(name, self.grid_spec, *args)

    @property
    def c2_seed_point(self) -> Tuple[float, ...]:
        return tuple(self.c2_seed) if self.c2_seed is not None else (0.0,) * self.n

    @property
    def velocity_floor_point(self) -> Tuple[float, ...]:
        return tuple(self.velocity_floor_x) if self.velocity_floor_x is not None else (0.0,) * self.n

    @property
    def velocity_floor_time(self) -> float:
        return self.t_end if self.velocity_floor_t is None else self.velocity_floor_t

    @property
    def normal_image_time(self) -> float:
        return self.t_end if self.normal_image_T is None else self.normal_image_T

    def snapshot_times(self) -> List[float]:
        """Times the enabled diagnostics read on top of the regular cadence."""
        times: List[float] = []
        if self.enabled("harnack"):
            for h in self.harnack:
                times.extend((h.t1, h.t2))
        if self.enabled("velocity_floor"):
            times.append(self.velocity_floor_time)
        if self.enabled("normal_image"):
            times.append(self.normal_image_time)
        if self.enabled("c2_monitor"):
            # the growth flag compares against the first quarter of the window
            times.append(0.25 * self.t_end)
        return sorted(t for t in set(times) if 0.0 <= t <= self.t_end)

    def enabled(self, name: str) -> bool:
        return name in self.diagnostics

    # ----- cross-field validation -----

    def validate(self, lines: Optional[Dict[str, int]] = None) -> List[ConfigIssue]:
        lines = lines or {}
        issues: List[ConfigIssue] = []

        def issue(key: str, message: str) -> None:
            issues.append(ConfigIssue(lines.get(key, 0), key, message))

        try:
            spec = self.grid_spec
        except ValueError as e:
            issue("dx", str(e))
            spec = None
        if self.time_step is TimeStepKind.FIXED and self.dt is None:
            issue("time_step", "fixed time_step needs dt")
        if self.boundary is BoundaryKind.BARRIER and not self.scenario.strip().startswith("hemisphere"):
            issue("boundary", "barrier boundary needs the hemisphere scenario")
        if spec is not None and self.boundary is BoundaryKind.EXTRAPOLATE and spec.nodes_per_axis < 5:
            issue("boundary", "extrapolate boundary needs at least 5 nodes per axis")
        if spec is not None:
            try:
                self.initial_datum()
            except (FlowError, ValueError) as e:
                issue("scenario", str(e))
        if self.snapshot_every is not None and self.snapshot_every > self.t_end:
            issue("snapshot_every", "snapshot_every must not exceed t_end")

        dim = self.n
        if self.c2_seed is not None and len(self.c2_seed) != dim:
            issue("c2_seed", f"c2_seed needs {dim} coordinates")
        elif spec is not None and not spec.contains(self.c2_seed_point):
            issue("c2_seed", "c2_seed lies outside the grid")
        if self.velocity_floor_x is not None and len(self.velocity_floor_x) != dim:
            issue("velocity_floor_x", f"velocity_floor_x needs {dim} coordinates")
        elif spec is not None and not spec.contains(self.velocity_floor_point):
            issue("velocity_floor_x", "velocity_floor_x lies outside the grid")
        if self.velocity_floor_time > self.t_end:
            issue("velocity_floor_t", "velocity_floor_t must not exceed t_end")
        for h in self.harnack:
            if len(h.direction) != dim + 1:
                issue("harnack", f"harnack direction needs {dim + 1} components")
            if not (0 < h.t1 <= h.t2 <= self.t_end):
                issue("harnack", "harnack times need 0 < t1 <= t2 <= t_end")
        if self.enabled("harnack") and not self.harnack:
            issue("harnack", "harnack diagnostic enabled without any harnack line")
        if not self.normal_image_r < self.normal_image_R:
            issue("normal_image_R", "normal_image_R must exceed normal_image_r")
        if self.normal_image_R >= self.half_width:
            issue("normal_image_R", "normal_image_R must lie inside the grid")
        if self.normal_image_time > self.t_end:
            issue("normal_image_T", "normal_image_T must not exceed t_end")

        doms = self.nested_domains
        if self.enabled("nested_domains") and not doms:
            issue("nested_domains", "nested_domains diagnostic enabled without domains")
        if any(b <= a for a, b in zip(doms, doms[1:])):
            issue("nested_domains", "nested_domains must be strictly increasing")
        for L in doms:
            try:
                GridSpec(self.n, L, self.dx)
            except ValueError as e:
                issue("nested_domains", f"domain {L!r}: {e}")
        if doms:
            try:
                GridSpec(self.n, 0.5 * doms[0], self.dx)
            except ValueError:
                issue("nested_domains", "half of the smallest domain must be a multiple of dx/2")
        return issues

    def validate_and_raise(self) -> None:
        issues = self.validate()
        if issues:
            raise ConfigError(issues)


def _config_fields() -> Dict[str, Any]:
    return {(f.metadata.get("key") or f.name): f for f in fields(RunConfig)}


def parse_config(text: str) -> RunConfig:
    """Parse 'key = value' lines; every problem is collected before raising."""
    by_key = _config_fields()
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    issues: List[ConfigIssue] = []

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            issues.append(ConfigIssue(number, None, f"expected 'key = value', got {line!r}"))
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        f = by_key.get(key)
        if f is None:
            issues.append(ConfigIssue(number, key, f"unknown key {key!r}"))
            continue
        meta = f.metadata
        if key in lines and not meta["repeat"]:
            issues.append(ConfigIssue(number, key, f"duplicate key {key!r}"))
            continue
        lines.setdefault(key, number)
        try:
            parsed = meta["parse"](value)
        except (FlowError, ValueError) as e:
            issues.append(ConfigIssue(number, key, f"{key}: {e}"))
            continue
        check = meta["check"]
        message = check(parsed) if check is not None else None
        if message:
            issues.append(ConfigIssue(number, key, message))
            continue
        if meta["repeat"]:
            values.setdefault(f.name, []).append(parsed)
        else:
            values[f.name] = parsed

    if issues:
        raise ConfigError(issues)
    config = RunConfig(**values)
    issues = config.validate(lines)
    if issues:
        raise ConfigError(issues)
    return config


def emit_config(config: RunConfig) -> str:
    """Inverse of parse_config: parse_config(emit_config(c)) == c."""
    out: List[str] = []
    for key, f in _config_fields().items():
        value = getattr(config, f.name)
        if value is None:
            continue
        emit = f.metadata["emit"]
        if f.metadata["repeat"]:
            out.extend(f"{key} = {emit(item)}" for item in value)
        else:
            out.append(f"{key} = {emit(value)}")
    return "\n".join(out) + "\n"


DEFAULT_CONFIG = RunConfig()
DEFAULT_LAYOUT = PlotLayout()

__all__ = [
    "KNOWN_DIAGNOSTICS",
    "PlotLayout",
    "HarnackRequest",
    "RunConfig",
    "parse_config",
    "emit_config",
    "DEFAULT_CONFIG",
    "DEFAULT_LAYOUT",
]
