import csv
import json
import subprocess
import sys

import pytest

from curvlab import __version__
from curvlab.cli import CSV_COLUMNS, ConfigError, main, resolve_config, run_config


def _run(tmp_path, *args):
    code = main(["run", *args, "--out", str(tmp_path)])
    report = json.loads((tmp_path / "report.json").read_text()) if (tmp_path / "report.json").exists() else None
    return code, report


def test_power_epigraph_exit_zero(tmp_path):
    code, report = _run(tmp_path, "examples/power_epigraph.json")
    assert code == 0
    assert report["verdict"] == "no_gap_consistent"
    assert any(c["kind"] == "plus_infinity" for c in report["curvature"])
    assert "+infinity" in (tmp_path / "report.json").read_text()


def test_flipped_exit_two(tmp_path):
    code, report = _run(tmp_path, "examples/power_epigraph_flipped.json")
    assert code == 2
    assert any(s["status"] == "violated" for s in report["snc"])


def test_bangbang_override_cells(tmp_path):
    code, report = _run(tmp_path, "--set", "grid.cells=64", "examples/bangbang_1d.json")
    assert code == 0
    assert report["diagnostics"]["K_estimate"] == pytest.approx(0.125, abs=1e-3)
    assert report["config_echo"]["grid"]["cells"] == 64


def test_report_fields_and_csv(tmp_path):
    code, report = _run(tmp_path, "box_qp")
    assert code == 0
    for key in ("config_echo", "fonc", "ndc", "curvature", "snc", "ssc", "growth", "verdict", "diagnostics", "metadata"):
        assert key in report
    assert report["config_echo"]["seed"] == 0
    with open(tmp_path / "samples.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS == ("radius", "l1_norm", "ratio", "sampler_tag")
    assert len(rows) > 1


def test_round_trip(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    _, first = _run(a, "state_constrained_ball")
    cfg = tmp_path / "echo.json"
    cfg.write_text(json.dumps(first["config_echo"]))
    _, second = _run(b, str(cfg))
    first.pop("metadata"), second.pop("metadata")
    first["config_echo"]["output"]["dir"] = second["config_echo"]["output"]["dir"]
    assert first == second


def test_determinism_across_threads(monkeypatch):
    cfg = resolve_config({"problem": {"example": "box_qp"}})
    monkeypatch.setenv("CURVLAB_THREADS", "1")
    one = run_config(cfg, 1)
    eight = run_config(cfg, 8)
    assert one == eight


def test_list_examples(capsys):
    assert main(["list-examples"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 7
    assert main(["list-examples", "--json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert {r["name"] for r in rows} == {
        "box_qp",
        "control_constrained",
        "state_constrained_ball",
        "power_epigraph",
        "power_epigraph_flipped",
        "bangbang_1d",
        "bangbang_2d_circle",
    }
    assert all(r["topic"] for r in rows)


def test_version(capsys):
    assert main(["version"]) == 0
    assert capsys.readouterr().out.strip() == __version__


@pytest.mark.parametrize(
    "cfg",
    [
        {"problem": {"example": "box_qp"}, "bogus": 1},
        {"problem": {"example": "nope"}},
        {"problem": {"example": "box_qp"}, "numerics": {"t0": -1}},
        {"problem": {}},
        {"problem": {"example": "box_qp"}, "seed": "zero"},
    ],
)
def test_strict_schema(cfg):
    with pytest.raises(ConfigError):
        resolve_config(cfg)


def test_config_errors_exit_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"problem": {"example": "box_qp"},\n "seed": }')
    assert main(["run", str(bad)]) == 1
    assert "line 2" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.json")]) == 1
    assert main(["run", "box_qp", "--set", "nokey"]) == 1
    assert main(["frobnicate"]) == 1


def test_inline_problem(tmp_path):
    cfg = {
        "problem": {
            "inline": {
                "dim": 2,
                "set": {"type": "unit_ball"},
                "objective": {"value": "-2*x1 + 0.5*x2^2", "grad": ["-2", "x2"], "hess": [["0", "0"], ["0", "1"]]},
                "point": [1, 0],
            }
        },
        "analysis": "ssc",
    }
    path = tmp_path / "inline.json"
    path.write_text(json.dumps(cfg))
    code, report = _run(tmp_path / "out", str(path))
    assert code == 0
    assert report["ssc"]["holds"]


def test_analysis_subsets(tmp_path):
    for analysis, expected in (("fonc", 0), ("curvature", 0), ("snc", 0), ("growth", 0)):
        code, report = _run(tmp_path / analysis, "box_qp", "--set", f"analysis={analysis}")
        assert code == expected, report["details"]


def test_console_script(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "curvlab.cli", "run", "power_epigraph_flipped", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
