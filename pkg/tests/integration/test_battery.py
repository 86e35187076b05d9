#!/usr/bin/env python3
import orjson
import pytest

from app import battery
from app.battery import (
    CHECK_COLUMNS,
    CRITERIA,
    CriterionResult,
    at_least,
    at_most,
    cap_monitor_errors,
    check_comparison,
    holds,
    run_battery,
    scaling_gap,
    sphere_cap_errors,
)
from core.solver import observed_order
from gen.csv.writer import read_csv


def test_checks():
    assert at_most("e", 1e-4, 1e-3).passed
    assert not at_least("order", 1.5, 1.8).passed
    flag = holds("monotone", False)
    assert (flag.value, flag.limit, flag.passed) == (0.0, 1.0, False)
    result = CriterionResult(3, "x", [at_most("a", 1, 2), holds("b", True)])
    assert result.passed
    assert result.rows()[0] == [3, "x", "a", 1.0, 2.0, True]


def test_criteria_are_numbered_in_order():
    assert [c.number for c in CRITERIA] == list(range(1, 10))


def test_subset_writes_summary(tmp_path):
    outcome = run_battery(tmp_path, seed=0, threads=2, only=[9, 4, 6, 4])
    assert [r.number for r in outcome.results] == [4, 6, 9]
    assert outcome.passed and outcome.exit_code == 0
    header, rows = read_csv(tmp_path / "paper_check.csv")
    assert header == CHECK_COLUMNS
    assert {row[0] for row in rows} == {"4", "6", "9"}
    summary = orjson.loads((tmp_path / "summary.json").read_bytes())
    assert summary["seed"] == 0
    assert summary["criteria"]["9"] == {"name": "scaling symmetry", "passed": True}
    assert summary["runtime"]["budget_seconds"] == 300.0
    assert summary["runtime"]["seconds"] >= 0.0 and summary["runtime"]["within_budget"] is True


def test_over_budget_is_reported_but_does_not_fail(tmp_path, monkeypatch):
    monkeypatch.setattr(battery, "RUNTIME_BUDGET", 0.0)
    outcome = run_battery(tmp_path, only=[4])
    assert not outcome.within_budget
    assert outcome.passed and outcome.exit_code == 0
    summary = orjson.loads((tmp_path / "summary.json").read_bytes())
    assert summary["runtime"]["within_budget"] is False
    assert summary["passed"] is True


def test_comparison_criterion_passes():
    checks = check_comparison(0)
    assert all(c.passed for c in checks), [(c.metric, c.value, c.limit) for c in checks if not c.passed]
    assert any(c.metric.startswith("ordered pair violation dx=") for c in checks)


def test_unknown_criterion(tmp_path):
    with pytest.raises(ValueError):
        run_battery(tmp_path, only=[0])


@pytest.mark.parametrize("rho", [1.0, 2.0])
def test_scaling_gap(rho):
    assert scaling_gap(rho) <= 10.0 * 0.02 ** 2


@pytest.mark.slow
@pytest.mark.parametrize("n, rho", [(1, 0.5), (1, 2.0), (2, 1.0)])
def test_sphere_cap_converges(n, rho):
    spacings = (1.0 / 50, 1.0 / 100, 1.0 / 200)
    errors = sphere_cap_errors(n, rho, spacings)
    assert errors[-1] <= 1e-3
    assert observed_order(spacings, errors) >= 1.8


@pytest.mark.slow
def test_cap_monitor_converges():
    spacings = (1.0 / 50, 1.0 / 100, 1.0 / 200)
    assert observed_order(spacings, cap_monitor_errors(spacings)) >= 1.8


@pytest.mark.slow
def test_full_battery(tmp_path):
    outcome = run_battery(tmp_path, threads=4)
    assert [r.number for r in outcome.results] == list(range(1, 10))
    assert outcome.passed, [(r.number, c.metric, c.value, c.limit)
                            for r in outcome.results for c in r.checks if not c.passed]
