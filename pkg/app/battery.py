#!/usr/bin/env python3
"""
Desk-scale acceptance battery ("paper-check").

Every criterion is a small study built from the solver, the exact-solution
oracles and the diagnostics. A criterion yields named checks (metric, value,
limit); the battery passes when every check does. Criteria are independent
and run on a thread pool, results are reported in criterion order.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from core.exact_solutions import (
    hemisphere_sphere,
    scenario,
    scenario_generator,
    solve_barrier,
    sphere_cap_graph,
)
from core.grid import GridFunction, GridSpec
from core.solver import (
    NESTED_NOISE_FLOOR,
    BoundaryPolicy,
    FlowParams,
    TimeStepPolicy,
    cap_trajectory,
    comparison_run,
    nested_domain_study,
    observed_order,
    rescale,
    run,
)
from diagnostics.c2_estimates import Patch, c2_closed_form, c2_monitor
from diagnostics.evolution import identity_sweep
from diagnostics.harnack import dual_concavity_check, harnack_check, sample_lambdas
from diagnostics.nu_condition import barrier_height_check, nu_preservation_check, nu_profile
from flow_types import BoundaryKind, CsvValue, EvolutionIdentity
from gen.csv.writer import write_csv
from app.runner import IDENTITY_TOL, write_json

logger = logging.getLogger(__name__)

RUNTIME_BUDGET = 300.0
ORDER_MIN = 1.8
# Halving dx must shrink an ordering violation by at least this factor (a halving less 20%)
HALVING_MIN = 1.6

CHECK_COLUMNS = ["criterion", "name", "metric", "value", "limit", "passed"]


@dataclass(frozen=True)
class Check:
    metric: str
    value: float
    limit: float
    passed: bool


def at_most(metric: str, value: float, limit: float) -> Check:
    return Check(metric, float(value), float(limit), bool(value <= limit))


def at_least(metric: str, value: float, limit: float) -> Check:
    return Check(metric, float(value), float(limit), bool(value >= limit))


def holds(metric: str, flag: bool) -> Check:
    return Check(metric, 1.0 if flag else 0.0, 1.0, bool(flag))


@dataclass
class CriterionResult:
    number: int
    name: str
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def rows(self) -> List[List[CsvValue]]:
        return [[self.number, self.name, c.metric, c.value, c.limit, c.passed] for c in self.checks]


@dataclass(frozen=True)
class Criterion:
    number: int
    name: str
    check: Callable[[int], List[Check]]


def _params(rho: float, n: int, L: float, dx: float, t_end: float,
            boundary: BoundaryKind = BoundaryKind.EXTRAPOLATE, barrier=None) -> FlowParams:
    return FlowParams(rho=rho, n=n, half_width=L, dx=dx, t_end=t_end,
                      time_step=TimeStepPolicy(), boundary=BoundaryPolicy(boundary, barrier))


def _max_gap(a: GridFunction, b: GridFunction) -> float:
    return float(np.max(np.abs(a.values - b.values)))


# ===== 1. SPHERE ORACLE =====

SPHERE_R0 = 2.0
SPHERE_L = 0.5
SPHERE_T = 0.005
SPHERE_SPACINGS = (1.0 / 50, 1.0 / 100, 1.0 / 200)


def sphere_cap_errors(n: int, rho: float, spacings: Sequence[float] = SPHERE_SPACINGS,
                      t_end: float = SPHERE_T) -> List[float]:
    """Max-norm error of the flowed cap against the exact cap at t_end, per spacing."""
    sphere = hemisphere_sphere(SPHERE_R0, rho, n)
    errors = []
    for dx in spacings:
        params = _params(rho, n, SPHERE_L, dx, t_end, BoundaryKind.BARRIER, sphere)
        u0 = sphere_cap_graph(sphere, 0.0, params.grid_spec)
        final = run(u0, params).final
        errors.append(_max_gap(final, sphere_cap_graph(sphere, final.t, params.grid_spec)))
    return errors


def check_sphere_oracle(seed: int) -> List[Check]:
    checks = []
    for n in (1, 2):
        for rho in (0.5, 1.0, 2.0):
            tag = f"n={n} rho={rho:g}"
            if hemisphere_sphere(SPHERE_R0, rho, n).radius(SPHERE_T) <= 1.5:
                raise ValueError(f"t_end too late for the sphere oracle ({tag})")
            errors = sphere_cap_errors(n, rho)
            checks.append(at_most(f"{tag} error at dx=1/200", errors[-1], 1e-3))
            checks.append(at_least(f"{tag} observed order", observed_order(SPHERE_SPACINGS, errors), ORDER_MIN))
    return checks


# ===== 2. COMPARISON PRINCIPLE =====

def check_comparison(seed: int) -> List[Check]:
    checks = []
    barrier = solve_barrier(eps=1.0, r_eps=1.0, T=0.05, rho=1.0, n=1)
    params = _params(1.0, 1, 1.0, 0.02, barrier.T)
    lower = scenario("scaled_paraboloid", params.grid_spec, 0.25)
    report = comparison_run(lower, barrier.sphere(), params, snapshot_every=0.01)
    checks.append(at_most("paraboloid above barrier cap", report.violation, report.slack))
    heights = barrier_height_check(run(lower, params, snapshot_every=0.01), barrier)
    checks.append(holds("barrier height premise", heights.premise_holds))
    checks.append(at_most("barrier height sup on B_reps", heights.later_sup, barrier.eps))

    # the steeper lower graph rises faster at the vertex; the gap is 0.1 at x = +-1
    violations = []
    for dx in (0.04, 0.02):
        p = _params(1.0, 1, 1.0, dx, 0.05)
        low = scenario("paraboloid", p.grid_spec)
        flat = scenario("scaled_paraboloid", p.grid_spec, 0.5)
        high = flat.with_values(flat.values + 0.6, flat.t)
        rep = comparison_run(low, high, p, snapshot_every=0.01)
        checks.append(at_most(f"ordered pair violation dx={dx:g}", rep.violation, rep.slack))
        violations.append(rep.violation)
    if max(violations) <= NESTED_NOISE_FLOOR:
        checks.append(at_most("ordered pair violation at noise floor", max(violations), NESTED_NOISE_FLOOR))
    else:
        shrink = violations[0] / violations[1] if violations[1] > 0 else math.inf
        checks.append(at_least("ordered pair violation shrink on halving", shrink, HALVING_MIN))
    return checks


# ===== 3. NU-CONDITION =====

def check_nu_condition(seed: int) -> List[Check]:
    params = _params(1.0, 1, 4.0, 0.02, 0.05)
    u0 = scenario("paraboloid", params.grid_spec)
    radii = (2.0, 5.0, 10.0)
    prof = nu_profile(u0, radii)
    checks = [holds("paraboloid profile decays", prof.decays())]
    report = nu_preservation_check(run(u0, params, snapshot_every=0.01), radii)
    checks.append(at_most("paraboloid profile growth along the flow", report.worst_excess, report.slack))

    cone = scenario("smoothed_cone", GridSpec(2, 4.0, 0.05), 0.05)
    cone_prof = nu_profile(cone, (1.0, 2.0, 4.0, 6.0))
    checks.append(holds("cone profile nonempty", all(c > 0 for c in cone_prof.pair_count)))
    checks.append(at_least("cone profile minimum", min(cone_prof.nonempty() or [0.0]), 0.5))
    return checks


# ===== 4. DUAL CONCAVITY =====

def check_dual_concavity(seed: int) -> List[Check]:
    lambdas = sample_lambdas(1000, 2, seed)
    checks = []
    for rho in (0.5, 1.0, 2.0, 5.0):
        rep = dual_concavity_check(rho, lambdas)
        checks.append(at_least(f"rho={rho:g} min eigenvalue / norm", rep.min_eigen_ratio, -1e-10))
        checks.append(at_most(f"rho={rho:g} minor formula error", rep.max_minor_error, 1e-8))
        checks.append(at_most(f"rho={rho:g} finite-difference Hessian error", rep.max_hessian_error, 1e-4))
    return checks


# ===== 5. HARNACK =====

def check_harnack(seed: int) -> List[Check]:
    checks = []
    spec = GridSpec(1, 0.5, 0.01)
    for rho in (0.5, 1.0, 2.0):
        sphere = hemisphere_sphere(SPHERE_R0, rho, 1)
        times = np.linspace(0.05, 0.5, 10) * sphere.extinction_time
        traj = cap_trajectory(sphere, times, spec, _params(rho, 1, spec.half_width, spec.dx, float(times[-1])))
        margin = math.inf
        for i, t1 in enumerate(times):
            for t2 in times[i:]:
                rec = harnack_check(traj, (0.0, -1.0), float(t1), float(t2))
                margin = min(margin, rec.ratio - rec.threshold)
        checks.append(at_least(f"sphere rho={rho:g} worst ratio minus threshold", margin, 0.0))

        params = _params(rho, 1, 2.0, 0.02, 0.04)
        flow = run(scenario("paraboloid", params.grid_spec), params, snapshot_every=0.01)
        rec = harnack_check(flow, (0.0, -1.0), 0.01, 0.04)
        checks.append(at_least(f"paraboloid rho={rho:g} ratio minus threshold", rec.ratio - rec.threshold, 0.0))
    return checks


# ===== 6. EVOLUTION IDENTITIES =====

def check_evolution_identities(seed: int) -> List[Check]:
    checks = []
    for identity in EvolutionIdentity:
        worst = max(r.residual for r in identity_sweep(50, seed, identity))
        checks.append(at_most(f"{identity.value} worst residual", worst, IDENTITY_TOL))
    return checks


# ===== 7. C2 MONITOR =====

C2_BETA = 2.0
C2_G = 0.5


def cap_monitor_errors(spacings: Sequence[float] = SPHERE_SPACINGS, offset: float = 0.02) -> List[float]:
    """Worst gap between the grid monitor and its closed form on the exact cap, per spacing."""
    sphere = hemisphere_sphere(SPHERE_R0, 1.0, 1)
    times = np.linspace(0.0, 0.01, 5)
    patch = Patch((0.0,), offset, C2_G)
    errors = []
    for dx in spacings:
        spec = GridSpec(1, SPHERE_L, dx)
        traj = cap_trajectory(sphere, times, spec, _params(1.0, 1, SPHERE_L, dx, float(times[-1])))
        mon = c2_monitor(traj, C2_BETA, patch)
        exact = [c2_closed_form(sphere, t, C2_BETA, offset, C2_G) for t in mon.times]
        errors.append(max(abs(a - b) for a, b in zip(mon.unweighted, exact)))
    return errors


def check_c2_monitor(seed: int) -> List[Check]:
    errors = cap_monitor_errors()
    checks = [at_least("cap monitor observed order", observed_order(SPHERE_SPACINGS, errors), ORDER_MIN)]
    params = _params(1.0, 1, 2.0, 0.02, 0.05)
    traj = run(scenario("paraboloid", params.grid_spec), params, snapshot_every=0.0025)
    mon = c2_monitor(traj, C2_BETA, Patch((1.5,), 0.004, C2_G))
    checks.append(at_most("paraboloid weighted peak / first-quarter peak",
                          max(mon.weighted) / mon.first_quarter_max(), 3.0))
    return checks


# ===== 8. NESTED DOMAINS =====

def check_nested_domains(seed: int) -> List[Check]:
    params = _params(1.0, 1, 2.0, 0.02, 0.05)
    rep = nested_domain_study(scenario_generator("paraboloid"), params, (2.0, 3.0, 4.0), snapshot_every=0.01)
    checks = [holds("paraboloid differences decrease", rep.monotone)]

    sphere = hemisphere_sphere(SPHERE_R0, 1.0, 1)
    cap_params = _params(1.0, 1, 0.2, 0.01, SPHERE_T, BoundaryKind.BARRIER, sphere)
    cap = nested_domain_study(scenario_generator("hemisphere(2)"), cap_params, (0.2, 0.3, 0.4))
    checks.append(at_most("cap differences", max(cap.differences), 10.0 * cap_params.dx ** 2))
    return checks


# ===== 9. SCALING =====

def scaling_gap(rho: float, lam: float = 2.0, dx: float = 0.02, t_end: float = 0.02) -> float:
    """Distance between the rescaled flow and the flow of the rescaled datum."""
    params = _params(rho, 1, 1.0, dx, t_end)
    u0 = scenario("paraboloid", params.grid_spec)
    base = run(u0, params).final
    scaled_params = _params(rho, 1, lam * params.half_width, lam * dx, lam ** (rho + 1.0) * t_end)
    scaled = run(rescale(u0, lam, rho), scaled_params).final
    return _max_gap(rescale(base, lam, rho), scaled)


def check_scaling(seed: int) -> List[Check]:
    return [at_most(f"rho={rho:g} rescaling gap", scaling_gap(rho), 10.0 * 0.02 ** 2) for rho in (1.0, 2.0)]


CRITERIA: List[Criterion] = [
    Criterion(1, "sphere oracle convergence", check_sphere_oracle),
    Criterion(2, "comparison principle", check_comparison),
    Criterion(3, "nu-condition", check_nu_condition),
    Criterion(4, "dual concavity", check_dual_concavity),
    Criterion(5, "harnack inequality", check_harnack),
    Criterion(6, "evolution identities", check_evolution_identities),
    Criterion(7, "c2 monitor", check_c2_monitor),
    Criterion(8, "nested domains", check_nested_domains),
    Criterion(9, "scaling symmetry", check_scaling),
]
CRITERIA_BY_NUMBER: Dict[int, Criterion] = {c.number: c for c in CRITERIA}


@dataclass
class BatteryOutcome:
    results: List[CriterionResult]
    files: List[Path]
    elapsed: float = 0.0

    @property
    def within_budget(self) -> bool:
        return self.elapsed <= RUNTIME_BUDGET

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


def _evaluate(criterion: Criterion, seed: int) -> CriterionResult:
    logger.info(f"Criterion {criterion.number}: {criterion.name}")
    result = CriterionResult(criterion.number, criterion.name, criterion.check(seed))
    for c in result.checks:
        if not c.passed:
            logger.warning(f"Criterion {criterion.number} check '{c.metric}' failed: {c.value!r} vs {c.limit!r}")
    return result


def run_battery(out_dir: Path, seed: int = 0, threads: int = 1,
                only: Optional[Iterable[int]] = None) -> BatteryOutcome:
    if only is None:
        selected = CRITERIA
    else:
        unknown = sorted(set(only) - set(CRITERIA_BY_NUMBER))
        if unknown:
            raise ValueError(f"unknown criteria {unknown}; known: 1-{len(CRITERIA)}")
        selected = [CRITERIA_BY_NUMBER[k] for k in sorted(set(only))]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        futures = [pool.submit(_evaluate, c, seed) for c in selected]
        results = [f.result() for f in futures]
    elapsed = time.perf_counter() - started
    if elapsed > RUNTIME_BUDGET:
        logger.warning(f"Battery took {elapsed:.1f}s, over the {RUNTIME_BUDGET:.0f}s budget")
    else:
        logger.info(f"Battery finished in {elapsed:.1f}s")

    files = [out / "paper_check.csv", out / "summary.json"]
    write_csv(files[0], CHECK_COLUMNS, [row for r in results for row in r.rows()])
    outcome = BatteryOutcome(results, files, elapsed)
    write_json(files[1], {
        "seed": seed,
        "passed": outcome.passed,
        # wall clock, informational only; never part of "passed"
        "runtime": {
            "seconds": round(elapsed, 3),
            "budget_seconds": RUNTIME_BUDGET,
            "within_budget": outcome.within_budget,
        },
        "criteria": {str(r.number): {"name": r.name, "passed": r.passed} for r in results},
    })
    return outcome


__all__ = [
    "Check",
    "CriterionResult",
    "Criterion",
    "CRITERIA",
    "BatteryOutcome",
    "sphere_cap_errors",
    "cap_monitor_errors",
    "scaling_gap",
    "run_battery",
]
