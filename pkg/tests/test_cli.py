import json
import subprocess
import sys

import numpy as np
import pytest

from tangent_warp import io_formats as iof
from tangent_warp.cli import main
from tangent_warp.geometry import Curve, TangentProfile, from_tangent
from tangent_warp.scenario import fixture_names, make_fixture


def scene(tmp_path, name, curve):
    p = tmp_path / name
    iof.save_scene(p, curve)
    return str(p)


def arc(n_seg, turn, dl=0.05, base=(0.0, 0.0)):
    return from_tangent(TangentProfile(np.linspace(0, turn, n_seg), base, dl))


# -- register --------------------------------------------------------------

def test_register_identical(tmp_path, capsys):
    a = scene(tmp_path, "a.json", arc(12, 90))
    assert main(["register", a, a, "--out", str(tmp_path / "r.json")]) == 0
    doc = iof.load_result(tmp_path / "r.json")
    assert doc["diagnostics"]["max_displacement"] < 1e-6
    assert "register:" in capsys.readouterr().err


def test_register_translated(tmp_path, capsys):
    c = arc(12, 90)
    x = scene(tmp_path, "x.json", Curve(c.nodes + [0.05, 0.02], c.delta_l))
    y = scene(tmp_path, "y.json", c)
    assert main(["register", x, y]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["diagnostics"]["residual"] < 1e-2 * doc["diagnostics"]["diameter"]


def test_register_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"version": 1, "nodes": [[0, 0], [1, NaN]]}')
    assert main(["register", str(bad), str(bad)]) == 1
    assert "node 1" in capsys.readouterr().err


def test_register_not_converged(tmp_path):
    x = scene(tmp_path, "x.json", arc(12, 90))
    y = scene(tmp_path, "y.json", arc(12, 30))
    assert main(["register", x, y, "--max-iter", "1", "--out", str(tmp_path / "r.json")]) == 2


def test_bad_flags_are_input_errors(tmp_path):
    a = scene(tmp_path, "a.json", arc(5, 10))
    assert main(["register", a, a, "--omega", "0.5"]) == 1
    assert main(["register", a, a, "--lambda", "-1"]) == 1
    assert main(["nonsense"]) == 1


# -- warp ------------------------------------------------------------------

def test_warp_tangent_fixture(tmp_path):
    assert main(["warp", "--fixture", "straighten", "--out-dir", str(tmp_path)]) == 0
    doc = iof.load_result(tmp_path / "warp_tangent.json")
    assert doc["diagnostics"]["length_error"] < 1e-12
    assert doc["diagnostics"]["segment_deviation"] < 1e-9
    assert not doc["diagnostics"]["over_stretch"]
    assert (tmp_path / "warp_tangent.svg").read_text().startswith("<?xml")


def test_warp_cartesian_fixture(tmp_path):
    assert main(["warp", "--fixture", "straighten", "--mode", "cartesian",
                 "--out-dir", str(tmp_path)]) == 0
    doc = iof.load_result(tmp_path / "warp_cartesian.json")
    assert doc["diagnostics"]["segment_deviation"] > 0.05
    assert doc["diagnostics"]["over_stretch"]


def test_warp_files_and_count_mismatch(tmp_path, capsys):
    tb = scene(tmp_path, "tb.json", arc(10, 60))
    ta = scene(tmp_path, "ta.json", arc(10, 0))
    test = scene(tmp_path, "t.json", arc(14, 100, 0.04))
    assert main(["warp", tb, ta, test, "--out-dir", str(tmp_path)]) == 0
    short = scene(tmp_path, "short.json", arc(8, 0))
    assert main(["warp", tb, short, test, "--out-dir", str(tmp_path)]) == 1
    assert "node counts" in capsys.readouterr().err
    assert main(["warp", tb, ta, "--out-dir", str(tmp_path)]) == 1


# -- task ------------------------------------------------------------------

def test_task_knot_fixture(tmp_path):
    assert main(["task", "--fixture", "knot_4step", "--out-dir", str(tmp_path)]) == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["step_1.json", "step_2.json", "step_3.json", "step_4.json", "summary.json"]
    summary = iof.load_result(tmp_path / "summary.json")
    assert max(abs(e) for e in summary["diagnostics"]["length_errors"]) < 1e-9


def test_task_files_match_fixture(tmp_path):
    fx, files = tmp_path / "fx", tmp_path / "files"
    assert main(["fixtures", "--write", str(tmp_path / "data")]) == 0
    assert main(["task", "--fixture", "straighten", "--out-dir", str(fx)]) == 0
    assert main(["task", str(tmp_path / "data" / "straighten.demo.json"),
                 str(tmp_path / "data" / "straighten.test.json"), "--out-dir", str(files)]) == 0
    for name in ("step_1.json", "summary.json"):
        assert (fx / name).read_bytes() == (files / name).read_bytes()


def test_task_continuity_violation(tmp_path, capsys):
    demo, test = make_fixture("knot_4step")
    doc = json.loads(iof.dumps(iof.demo_document(demo)))
    doc["steps"][2]["before"]["nodes"][5][0] += 0.1
    (tmp_path / "d.json").write_text(json.dumps(doc))
    t = scene(tmp_path, "t.json", test)
    assert main(["task", str(tmp_path / "d.json"), t, "--out-dir", str(tmp_path / "o")]) == 1
    assert "continuity" in capsys.readouterr().err


# -- validate / plot / fixtures -------------------------------------------

def test_validate_result_and_scene(tmp_path, capsys):
    assert main(["warp", "--fixture", "cloth_unfold_wide", "--mode", "cartesian",
                 "--out-dir", str(tmp_path)]) == 0
    capsys.readouterr()
    t = scene(tmp_path, "t.json", arc(10, 40))
    assert main(["validate", str(tmp_path / "warp_cartesian.json"), t]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["diagnostics"]["over_stretch"]
    assert doc["diagnostics"]["deviations"][1] < 1e-9


def test_validate_needs_spacing(tmp_path):
    p = tmp_path / "raw.json"
    p.write_text('{"version": 1, "nodes": [[0, 0], [1, 0], [3, 0]]}')
    assert main(["validate", str(p)]) == 1
    assert main(["validate", str(p), "--delta-l", "1", "--out", str(tmp_path / "v.json")]) == 0
    assert iof.load_result(tmp_path / "v.json")["diagnostics"]["max_deviation"] == 1.0


def test_plot(tmp_path):
    a = scene(tmp_path, "a.json", arc(10, 40))
    b = scene(tmp_path, "b.json", arc(10, 80))
    assert main(["plot", a, b, "--out", str(tmp_path / "p.svg"), "--markers"]) == 0
    svg = (tmp_path / "p.svg").read_text()
    assert svg.count("<polyline") == 2 and ">a<" in svg and ">b<" in svg


def test_fixtures_listing(capsys):
    assert main(["fixtures"]) == 0
    assert capsys.readouterr().out.split() == fixture_names()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "tangent_warp", "fixtures"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "straighten" in proc.stdout


@pytest.mark.parametrize("mode", ["tangent", "cartesian"])
def test_warp_deterministic(tmp_path, mode):
    for d in ("a", "b"):
        assert main(["warp", "--fixture", "cloth_unfold", "--mode", mode,
                     "--out-dir", str(tmp_path / d)]) == 0
    for ext in ("json", "svg"):
        assert (tmp_path / "a" / f"warp_{mode}.{ext}").read_bytes() == \
            (tmp_path / "b" / f"warp_{mode}.{ext}").read_bytes()
