#!/usr/bin/env python3
import orjson
import pytest

from app.cli import main
from gen.csv.writer import write_csv


def _last_json_line(text: str) -> dict:
    return orjson.loads(text.strip().splitlines()[-1])


def test_scenarios_lists_every_datum(capsys):
    assert main(["scenarios"]) == 0
    out = capsys.readouterr().out
    for name in ("paraboloid", "scaled_paraboloid(1.0)", "smoothed_cone(0.05)", "hemisphere(2.0)"):
        assert name in out


def test_run_writes_files(tmp_path, capsys):
    config = tmp_path / "run.cfg"
    config.write_text("rho = 1.0\nn = 1\nscenario = paraboloid\nL = 2.0\ndx = 0.05\nt_end = 0.01\n"
                      "diagnostics = steps\n")
    out = tmp_path / "out"
    assert main(["run", str(config), "--out", str(out)]) == 0
    printed = capsys.readouterr().out.split()
    assert str(out / "trajectory.csv") in printed
    assert (out / "steps.csv").exists()
    assert (out / "summary.json").exists()


def test_run_reports_config_errors_as_json(tmp_path, capsys):
    config = tmp_path / "bad.cfg"
    config.write_text("rho = -1\n")
    assert main(["run", str(config), "--out", str(tmp_path / "out")]) == 2
    payload = _last_json_line(capsys.readouterr().err)
    assert payload["error"] == "ConfigError"
    assert payload["issues"][0]["line"] == 1
    assert "rho must be > 0" in payload["message"]


def test_missing_config_file(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.cfg")]) == 2
    assert _last_json_line(capsys.readouterr().err)["error"] == "FileNotFoundError"


def test_cone_decay_assertion_exits_one(tmp_path):
    config = tmp_path / "cone.cfg"
    config.write_text("scenario = smoothed_cone(0.1)\nn = 2\nL = 2\ndx = 0.05\nt_end = 0.001\n"
                      "diagnostics = nu_profile\nnu_radii = 1, 2, 3\nnu_expect = decay\n")
    assert main(["run", str(config), "--out", str(tmp_path / "out")]) == 1


@pytest.mark.parametrize("argv", [
    ["run", "x.cfg", "--threads", "0"],
    ["paper-check", "--only", "one"],
    ["frobnicate"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 2


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "paper-check" in capsys.readouterr().out


def test_plot_next_to_the_csv(tmp_path, capsys):
    csv_path = tmp_path / "radius.csv"
    write_csv(csv_path, ["t", "r"], [[0.0, 1.0], [0.1, 0.8], [0.2, 0.55]])
    assert main(["plot", str(csv_path), "t:r"]) == 0
    svg = tmp_path / "radius.svg"
    assert svg.exists()
    assert capsys.readouterr().out.strip() == str(svg)


def test_plot_missing_column(tmp_path, capsys):
    csv_path = tmp_path / "radius.csv"
    write_csv(csv_path, ["t", "r"], [[0.0, 1.0]])
    assert main(["plot", str(csv_path), "t:H"]) == 2
    assert "missing column" in _last_json_line(capsys.readouterr().err)["message"]


def test_plot_short_row_is_an_error_line(tmp_path, capsys):
    csv_path = tmp_path / "short.csv"
    csv_path.write_bytes(b"x,y\n1,2\n3\n")
    assert main(["plot", str(csv_path), "x:y"]) == 2
    payload = _last_json_line(capsys.readouterr().err)
    assert payload["error"] == "ValueError"
    assert "row 3" in payload["message"]
    assert not csv_path.with_suffix(".svg").exists()


def test_paper_check_subset(tmp_path, capsys):
    out = tmp_path / "check"
    assert main(["paper-check", "--out", str(out), "--only", "4,6"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[:2] == ["4. dual concavity: PASS", "6. evolution identities: PASS"]
    assert lines[2].startswith("runtime: ") and lines[2].endswith("(budget 300s)")
    assert len(lines) == 3
    assert (out / "paper_check.csv").exists()


def test_paper_check_unknown_criterion(tmp_path, capsys):
    assert main(["paper-check", "--out", str(tmp_path), "--only", "42"]) == 2
    assert "unknown criteria" in _last_json_line(capsys.readouterr().err)["message"]
