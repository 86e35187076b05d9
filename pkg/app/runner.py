#!/usr/bin/env python3
"""
Execution of one configured run: the flow, then every enabled diagnostic.

Diagnostics only read the trajectory, so they run concurrently on a thread
pool; results are gathered in configuration order and every file is written
from the calling thread, which keeps the artifacts byte-reproducible.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import orjson

from app.config import RunConfig
from core.geometry import geometry_fields
from core.solver import StepRecord, Trajectory, nested_domain_study, run
from core.exact_solutions import scenario_generator
from diagnostics.c2_estimates import Patch, c2_monitor
from diagnostics.evolution import identity_sweep
from diagnostics.harnack import dual_concavity_check, harnack_check, sample_lambdas, velocity_floor_check
from diagnostics.normal_image import normal_image_disjointness
from diagnostics.nu_condition import nu_preservation_check, nu_profile
from flow_types import CsvValue, EvolutionIdentity
from gen.csv.writer import write_csv
from gen.svg.writer import emit_plot

logger = logging.getLogger(__name__)

JSON_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY
IDENTITY_TOL = 1e-8


@dataclass
class DiagnosticResult:
    """Outcome of one diagnostic; passed is None for report-only tables."""
    name: str
    passed: Optional[bool]
    columns: List[str]
    rows: List[List[CsvValue]]
    summary: Dict[str, Any] = field(default_factory=dict)
    plot: Optional[str] = None


@dataclass
class RunOutcome:
    exit_code: int
    trajectory: Trajectory
    results: List[DiagnosticResult]
    files: List[Path]

    @property
    def passed(self) -> bool:
        return self.exit_code == 0


def _eps_label(r: float) -> str:
    return f"eps_r{r:g}"


# ===== DIAGNOSTIC ADAPTERS =====

def _nu_profile(cfg: RunConfig, traj: Trajectory) -> DiagnosticResult:
    first = nu_profile(traj.initial, cfg.nu_radii, cfg.nu_pair_distance, cfg.nu_stride)
    last = nu_profile(traj.final, cfg.nu_radii, cfg.nu_pair_distance, cfg.nu_stride)
    rows = [
        [r, e0, c0, e1, c1]
        for r, e0, c0, e1, c1 in zip(first.radii, first.eps_of_r, first.pair_count, last.eps_of_r, last.pair_count)
    ]
    passed = first.meets(cfg.nu_expect)
    return DiagnosticResult(
        "nu_profile", passed,
        ["r", "eps_initial", "pairs_initial", "eps_final", "pairs_final"], rows,
        {"expect": cfg.nu_expect.value, "eps_initial": first.eps_of_r},
        plot="r:eps_initial,eps_final",
    )


def _nu_preservation(cfg: RunConfig, traj: Trajectory) -> DiagnosticResult:
    report = nu_preservation_check(traj, cfg.nu_radii, cfg.nu_pair_distance, cfg.nu_stride)
    cols = ["t"] + [_eps_label(r) for r in cfg.nu_radii]
    rows = [[p.t, *p.eps_of_r] for p in report.profiles]
    return DiagnosticResult(
        "nu_preservation", report.passed, cols, rows,
        {"worst_excess": report.worst_excess, "slack": report.slack},
        plot="t:" + ",".join(cols[1:]),
    )


def _c2_monitor(cfg: RunConfig, traj: Trajectory) -> DiagnosticResult:
    patch = Patch(cfg.c2_seed_point, cfg.c2_offset, cfg.c2_G)
    mon = c2_monitor(traj, cfg.c2_beta, patch)
    return DiagnosticResult(
        "c2_monitor", mon.passed, ["t", "weighted", "unweighted", "patch_nodes"], mon.rows(),
        {"peak": max(mon.weighted), "first_quarter_peak": mon.first_quarter_max(), "flagged": mon.flagged},
        plot="t:weighted,unweighted",
    )


def _harnack(cfg: RunConfig, traj: Trajectory) -> DiagnosticResult:
    records = [harnack_check(traj, h.direction, h.t1, h.t2) for h in cfg.harnack]
    cols = [f"p{i + 1}" for i in range(cfg.n + 1)]
    cols += ["t1", "t2", "F1", "F2", "ratio", "bound", "threshold", "passed"]
    return DiagnosticResult(
        "harnack", all(r.passed for r in records), cols, [r.row() for r in records],
        {"worst_margin": min(r.ratio - r.threshold for r in records)},
    )


def _velocity_floor(cfg: RunConfig, traj: Trajectory) -> DiagnosticResult:
    rep = velocity_floor_check(traj, cfg.velocity_floor_point, cfg.velocity_floor_time)
    return DiagnosticResult(
        "velocity_floor", rep.passed, ["t", "H", "psi"], rep.rows(),
        {"floor": rep.floor, "margin": rep.margin, "psi_monotone": rep.psi_monotone},
        plot="t:H",
    )


def _normal_image(cfg: RunConfig, traj: Trajectory) -> DiagnosticResult:
    rep = normal_image_disjointness(traj, cfg.normal_image_r, cfg.normal_image_R, cfg.normal_image_time)
    return DiagnosticResult(
        "normal_image", rep.passed, ["t", "distance", "margin", "disjoint"], rep.rows(),
        {"min_distance": min(rep.distances)},
        plot="t:distance,margin",
    )


def _dual_concavity(cfg: RunConfig, traj: Trajectory) -> DiagnosticResult:
    lambdas = sample_lambdas(cfg.dual_samples, cfg.n, cfg.seed)
    rep = dual_concavity_check(cfg.rho, lambdas)
    cols = ["rho", "sample"] + [f"lambda{i + 1}" for i in range(cfg.n)]
    cols += ["min_eigenvalue", "norm", "minor_error", "hessian_error"]
    return DiagnosticResult(
        "dual_concavity", rep.passed, cols, rep.rows(),
        {"min_eigen_ratio": rep.min_eigen_ratio, "max_minor_error": rep.max_minor_error,
         "max_hessian_error": rep.max_hessian_error},
    )


def _evolution_identity(cfg: RunConfig, traj: Trajectory) -> DiagnosticResult:
    rows: List[List[CsvValue]] = []
    worst: Dict[str, float] = {}
    for identity in EvolutionIdentity:
        residuals = identity_sweep(cfg.identity_samples, cfg.seed, identity)
        rows.extend(r.row() for r in residuals)
        worst[identity.value] = max(r.residual for r in residuals)
    return DiagnosticResult(
        "evolution_identity", all(w < IDENTITY_TOL for w in worst.values()),
        ["identity", "t", "radius", "lhs", "rhs", "residual"], rows, {"worst": worst},
    )


def _nested_domains(cfg: RunConfig, traj: Trajectory) -> DiagnosticResult:
    rep = nested_domain_study(
        scenario_generator(cfg.scenario), cfg.flow_params(), cfg.nested_domains, cfg.snapshot_every
    )
    return DiagnosticResult(
        "nested_domains", rep.monotone, ["L_inner", "L_outer", "difference"], rep.rows(),
        {"dt": rep.dt, "window": rep.window, "degenerate": rep.degenerate},
        plot="L_outer:difference",
    )


def _steps(cfg: RunConfig, traj: Trajectory) -> DiagnosticResult:
    return DiagnosticResult("steps", None, list(StepRecord.COLUMNS), traj.record_rows(),
                            {"steps": len(traj.records)}, plot="t:min_H,max_H")


def _geometry(cfg: RunConfig, traj: Trajectory) -> DiagnosticResult:
    fields_ = geometry_fields(traj.final, cfg.rho)
    plot = "x1:H,K" if cfg.n == 1 else None
    return DiagnosticResult("geometry", None, fields_.columns(), fields_.rows(traj.final),
                            {"t": traj.final.t}, plot=plot)


DIAGNOSTICS: Dict[str, Callable[[RunConfig, Trajectory], DiagnosticResult]] = {
    "nu_profile": _nu_profile,
    "nu_preservation": _nu_preservation,
    "c2_monitor": _c2_monitor,
    "harnack": _harnack,
    "velocity_floor": _velocity_floor,
    "normal_image": _normal_image,
    "dual_concavity": _dual_concavity,
    "evolution_identity": _evolution_identity,
    "nested_domains": _nested_domains,
    "steps": _steps,
    "geometry": _geometry,
}


def run_diagnostics(cfg: RunConfig, traj: Trajectory, names: Sequence[str]) -> List[DiagnosticResult]:
    if not names:
        return []
    with ThreadPoolExecutor(max_workers=max(1, cfg.threads)) as pool:
        futures = [pool.submit(DIAGNOSTICS[name], cfg, traj) for name in names]
        return [f.result() for f in futures]


def write_json(path: Path, payload: Dict[str, Any]) -> None:
    path.write_bytes(orjson.dumps(payload, option=JSON_OPTIONS) + b"\n")


def run_command(cfg: RunConfig, out_dir: Optional[Path] = None) -> RunOutcome:
    """Run the flow and the enabled diagnostics; exit 0 iff every assertion passed."""
    cfg.validate_and_raise()
    out = Path(out_dir if out_dir is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)

    traj = run(cfg.initial_datum(), cfg.flow_params(), cfg.snapshot_every, cfg.snapshot_times())
    files: List[Path] = []
    path = out / "trajectory.csv"
    write_csv(path, traj.columns(), traj.rows())
    files.append(path)

    names = list(dict.fromkeys(cfg.diagnostics))
    results = run_diagnostics(cfg, traj, names)
    for res in results:
        path = out / f"{res.name}.csv"
        write_csv(path, res.columns, res.rows)
        files.append(path)
        if cfg.plots and res.plot and res.rows:
            files.append(emit_plot(path, res.plot, out / f"{res.name}.svg"))
        if res.passed is False:
            logger.warning(f"Diagnostic {res.name} failed: {res.summary}")
        else:
            logger.info(f"Diagnostic {res.name}: {'report' if res.passed is None else 'passed'}")

    passed = all(r.passed is not False for r in results)
    if results:
        path = out / "summary.json"
        write_json(path, {
            "scenario": cfg.scenario,
            "steps": len(traj.records),
            "final_time": traj.final.t,
            "passed": passed,
            "diagnostics": {r.name: {"passed": r.passed, **r.summary} for r in results},
        })
        files.append(path)
    return RunOutcome(0 if passed else 1, traj, results, files)


__all__ = [
    "DiagnosticResult",
    "RunOutcome",
    "DIAGNOSTICS",
    "run_diagnostics",
    "run_command",
    "write_json",
]
