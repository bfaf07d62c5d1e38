import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from hamreach.cli import main
from hamreach.config import ConfigError, ScenarioConfig
from hamreach.output import to_json

SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "torus.cfg"

BASE = """\
manifold.d = 1
manifold.periods = 2*pi
hamiltonian.h1 = cos(x1) + cos(p1)
hamiltonian.h2 = cos(x1 - p1) + 2*cos(2*x1 + p1)
larc.k = 4
grid.resolution = 16
reach.start = 0.3, 0.7
reach.budget = 500
run.seed = 1
"""


def write_cfg(tmp_path, text, name="s.cfg"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def run(tmp_path, *argv, out="out"):
    return main([*argv, "--out", str(tmp_path / out)])


def report(tmp_path, out="out"):
    return json.loads((tmp_path / out / "report.json").read_text())


# -- config ----------------------------------------------------------------------------

def test_shipped_scenario_loads():
    cfg = ScenarioConfig.load(SCENARIO)
    assert cfg.k == 4 and cfg.resolution == 64 and cfg.budget == 5e4
    H1, H2 = cfg.hamiltonians()
    assert cfg.manifold().compact


def test_comments_quotes_and_overrides():
    cfg = ScenarioConfig.from_text('# c\nhamiltonian.h1 = "cos(x1)"  # trailing\nlarc.k = 5\n', {"larc.k": "6"})
    assert cfg.h1 == "cos(x1)" and cfg.k == 6


@pytest.mark.parametrize(
    "text,line,key",
    [
        ("larc.k = 4\nlarc.kk = 3\n", 2, "larc.kk"),
        ("\n\nlarc.k = four\n", 3, "larc.k"),
        ("manifold.d = 1\nlarc.k = 1\n", 2, "larc.k"),
        ("larc.rank_tol = -1\n", 1, "larc.rank_tol"),
        ("grid.resolution\n", 1, None),
        ("sampler.mode = sideways\n", 1, "sampler.mode"),
    ],
)
def test_config_errors_carry_line_and_key(text, line, key):
    with pytest.raises(ConfigError) as err:
        ScenarioConfig.from_text(text)
    assert err.value.line == line and err.value.key == key
    assert f"line {line}" in str(err.value)


def test_bad_expression_reports_its_line():
    cfg = ScenarioConfig.from_text("manifold.periods = 2*pi\n\nhamiltonian.h1 = cos(x1) + p1\nhamiltonian.h2 = cos(\n")
    with pytest.raises(ConfigError) as err:
        cfg.hamiltonians()
    assert err.value.line == 3 and err.value.key == "hamiltonian.h1"


def test_probe_family_validated():
    with pytest.raises(ConfigError):
        ScenarioConfig.from_text("probe.F = 0\n")


# -- exit codes -----------------------------------------------------------------------------

def test_check_h1_generic(tmp_path, capsys):
    assert run(tmp_path, "check-h1", "--scenario", str(SCENARIO)) == 0
    r = report(tmp_path)
    assert r["schema"] == 1 and r["command"] == "check-h1"
    assert r["status"] == "satisfied" and r["count"] == 4 and len(r["critical"]) == 4
    assert len(r["escape"]) == 4
    assert "4 critical point(s)" in capsys.readouterr().out


def test_check_h1_violated(tmp_path):
    cfg = write_cfg(tmp_path, BASE.replace("cos(x1) + cos(p1)", "cos(p1)"))
    assert run(tmp_path, "check-h1", "--scenario", str(cfg)) == 2
    assert report(tmp_path)["status"] == "violated"


def test_rank_with_small_k_is_config_error(tmp_path, capsys):
    assert run(tmp_path, "rank", "--scenario", str(SCENARIO), "--larc.k=1") == 1
    assert "larc.k" in capsys.readouterr().err


def test_unknown_override_and_bad_flag(tmp_path):
    assert run(tmp_path, "rank", "--scenario", str(SCENARIO), "--larc.bogus=1") == 1
    assert run(tmp_path, "rank", "--scenario", str(SCENARIO), "--nonsense") == 1
    assert main(["flow", "--scenario", str(SCENARIO)]) == 1  # --schedule is required
    assert main([]) == 1


def test_missing_or_binary_scenario(tmp_path, capsys):
    assert run(tmp_path, "rank", "--scenario", str(tmp_path / "nope.cfg")) == 1
    bad = tmp_path / "bin.cfg"
    bad.write_bytes(b"larc.k = \xff\n")
    assert run(tmp_path, "rank", "--scenario", str(bad)) == 1
    assert "UTF-8" in capsys.readouterr().err


def test_config_error_message_has_line(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BASE + "larc.k = x\n")
    assert run(tmp_path, "rank", "--scenario", str(cfg)) == 1
    assert "line 10" in capsys.readouterr().err


def test_rank_grid_clean_and_degenerate(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    assert run(tmp_path, "rank", "--scenario", str(cfg), "--grid", "16") == 0
    r = report(tmp_path)
    assert r["nodes_total"] == 256 and r["failures"] == []
    deg = write_cfg(tmp_path, BASE.replace("cos(x1 - p1) + 2*cos(2*x1 + p1)", "cos(x1) + cos(p1)"), "d.cfg")
    assert run(tmp_path, "rank", "--scenario", str(deg), out="deg") == 2
    assert report(tmp_path, "deg")["failures"]


def test_rank_at_point(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    assert run(tmp_path, "rank", "--scenario", str(cfg), "--point", "0.3,0.7") == 0
    r = report(tmp_path)
    assert r["rank"] == 2 and r["full_rank"] is True and r["sigma_min"] > 0
    # at a critical point dH1 = 0 and the frame drops rank
    assert run(tmp_path, "rank", "--scenario", str(cfg), "--point", "0,0", out="crit") == 2


def test_bracket_prints_chain(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "manifold.periods = line\n")
    code = run(tmp_path, "bracket", "--scenario", str(cfg), "--h1", "p1", "--h2", "x1^3*p1", "--depth", "3")
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "B0 = p1*x1^3" and out[3] == "B3 = 6*p1"
    assert report(tmp_path)["entries"][-1] == "6*p1"


def test_flow_writes_trajectory(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    assert run(tmp_path, "flow", "--scenario", str(cfg), "--schedule", "1:0.5,2:-0.25", "--h", "1e-2") == 0
    lines = (tmp_path / "out" / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t_cumulative,x1,p1"
    last = [float(v) for v in lines[-1].split(",")]
    r = report(tmp_path)
    assert last[0] == pytest.approx(0.75)
    assert last[1:] == r["end"]
    assert r["rows"] == len(lines) - 1


def test_flow_rejects_bad_schedule(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    assert run(tmp_path, "flow", "--scenario", str(cfg), "--schedule", "3:1.0") == 1


def test_reach_outputs(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    assert run(tmp_path, "reach", "--scenario", str(cfg), "--mode", "both", "--resolution", "16") == 0
    out = tmp_path / "out"
    r = report(tmp_path)
    assert set(r["runs"]) == {"oriented", "unoriented"}
    assert math.isclose(r["gap"], abs(r["runs"]["oriented"]["fraction"] - r["runs"]["unoriented"]["fraction"]))
    rows = (out / "coverage.csv").read_text().splitlines()
    assert rows[0] == "mode,time,fraction" and len(rows) > 2
    pgm = (out / "grid.pgm").read_text().split()
    assert pgm[0] == "P2" and pgm[1:3] == ["16", "16"]
    assert len(pgm) == 4 + 16 * 16


def test_reports_are_byte_identical(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, BASE)
    assert run(tmp_path, "reach", "--scenario", str(cfg), out="a") == 0
    monkeypatch.setenv("HAMREACH_THREADS", "1")
    assert run(tmp_path, "reach", "--scenario", str(cfg), out="b") == 0
    for name in ("report.json", "coverage.csv", "grid.pgm"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_changes_report(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    run(tmp_path, "reach", "--scenario", str(cfg), out="a")
    run(tmp_path, "reach", "--scenario", str(cfg), "--seed", "2", out="b")
    assert (tmp_path / "a" / "report.json").read_bytes() != (tmp_path / "b" / "report.json").read_bytes()


def test_probe_command(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BASE + "probe.samples = 3\nprobe.cross_checks = 1\n")
    assert run(tmp_path, "probe", "--scenario", str(cfg)) == 0
    r = report(tmp_path)
    assert r["n"] == 3 and r["failures"] == 0
    assert "0/3 failures" in capsys.readouterr().out


def test_probe_refuses_bad_h1(tmp_path):
    cfg = write_cfg(tmp_path, BASE.replace("cos(x1) + cos(p1)", "cos(p1)") + "probe.samples = 2\n")
    assert run(tmp_path, "probe", "--scenario", str(cfg)) == 2
    assert report(tmp_path)["h1_check"]["status"] == "violated"


def test_executable_exit_status(tmp_path):
    cfg = write_cfg(tmp_path, BASE.replace("cos(x1) + cos(p1)", "cos(p1)"))
    cmd = [sys.executable, "-m", "hamreach.cli", "check-h1", "--scenario", str(cfg), "--out", str(tmp_path / "o")]
    assert subprocess.run(cmd, capture_output=True).returncode == 2


# -- serialization -----------------------------------------------------------------------------

def test_json_floats_use_17_digits():
    text = to_json({"a": 0.1, "b": [1.0, float("nan")], "c": np.float64(2) / 3, "d": np.arange(2)})
    doc = json.loads(text)
    assert '"a": 0.10000000000000001' in text
    assert doc["b"] == [1, None] and doc["c"] == 2 / 3 and doc["d"] == [0, 1]
