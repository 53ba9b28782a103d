from __future__ import annotations

import json
import os
import subprocess
import sys

import pytest

from dspin import cli
from dspin import config as cfgmod
from dspin.errors import ConfigInvalid

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SCENARIOS = os.path.join(ROOT, "scenarios")


def _write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(p)


@pytest.mark.parametrize(
    "cfg, key",
    [
        ({"run": "describe", "curve": {"kind": "helix_const"}, "grdi": {}}, "grdi"),
        ({"run": "describe", "curve": {"kind": "helix_const", "params": {"rho": -1}}}, "curve.params.rho"),
        ({"run": "describe", "curve": {"kind": "helix_const", "params": {"pitch": 2}}}, "curve.params.pitch"),
        ({"run": "describe", "curve": {"params": {"rho": 1}}}, "curve.kind"),
        ({"run": "texture", "curve": {"kind": "helix_const"}, "grid": {"n": 1}}, "grid.n"),
        ({"run": "paint"}, "run"),
        ({"run": "texture", "curve": {"kind": "helix_const"}, "initial": "q"}, "initial"),
    ],
)
def test_schema_errors_name_key(cfg, key):
    with pytest.raises(ConfigInvalid) as e:
        cfgmod.validate(cfg)
    assert e.value.key == key
    assert key in str(e.value)


def test_round_trip_is_byte_stable():
    for name in sorted(os.listdir(SCENARIOS)):
        with open(os.path.join(SCENARIOS, name)) as fh:
            text = fh.read()
        once = cfgmod.canonical(cfgmod.parse(text))
        assert cfgmod.canonical(cfgmod.parse(once)) == once


def test_defaults():
    r = cfgmod.resolve({"curve": {"kind": "helix_exp"}})
    assert r["curve"]["params"] == {"rho": 1.0, "c": 1.0, "f": 5.0}
    assert r["initial"] == "N" and r["grid"]["n"] == 256


def test_bad_json_and_missing_file(tmp_path):
    with pytest.raises(ConfigInvalid):
        cfgmod.load(_write(tmp_path, "{not json"))
    with pytest.raises(ConfigInvalid):
        cfgmod.load(str(tmp_path / "absent.json"))


def test_exit_codes(tmp_path, capsys):
    out = str(tmp_path / "o")
    bad = _write(tmp_path, {"run": "describe", "curve": {"kind": "helix_const"}, "extra": 1})
    assert cli.main(["describe", "--config", bad, "--out", out]) == 2
    assert "extra" in capsys.readouterr().err
    mismatch = _write(tmp_path, {"run": "flux", "curve": {"kind": "helix_const"}}, "m.json")
    assert cli.main(["describe", "--config", mismatch, "--out", out]) == 2
    assert "[run]" in capsys.readouterr().err
    # geometry error: flux on an open curve
    open_curve = _write(tmp_path, {"run": "flux", "curve": {"kind": "helix_const"}}, "g.json")
    assert cli.main(["flux", "--config", open_curve, "--out", out]) == 3
    # numerical tolerance: coarse texture grid
    coarse = _write(tmp_path, {"run": "texture", "curve": {"kind": "viviani_on_sphere"}, "grid": {"n": 8}}, "t.json")
    assert cli.main(["texture", "--config", coarse, "--out", out]) == 4
    # outputs are still written and the precession report is present
    assert json.load(open(os.path.join(out, "precession.json")))["r2_doubled_darboux_law"] >= 0
    assert json.load(open(os.path.join(out, "manifest.json")))["tolerance_failure"]
    # Viviani flux needs an explicit lobe
    viv = _write(tmp_path, {"run": "flux", "curve": {"kind": "viviani_on_cylinder"}}, "v.json")
    assert cli.main(["flux", "--config", viv, "--out", out]) == 2
    assert "region.seed" in capsys.readouterr().err


def test_threads_env(tmp_path, monkeypatch):
    cfg = _write(tmp_path, {"run": "describe", "curve": {"kind": "helix_const"}, "grid": {"n": 8}})
    monkeypatch.setenv("DSPIN_THREADS", "zero")
    assert cli.main(["describe", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    monkeypatch.setenv("DSPIN_THREADS", "1")
    assert cli.main(["describe", "--config", cfg, "--out", str(tmp_path / "o")]) == 0


def test_csv_format(tmp_path):
    cfg = _write(tmp_path, {"run": "describe", "curve": {"kind": "viviani_on_sphere"}, "grid": {"n": 16}})
    out = tmp_path / "o"
    assert cli.main(["describe", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "describe.csv").read_text().splitlines()
    assert lines[0] == "s,phi,kappa_g,kappa_n,tau_g,beta_norm,V_g,V_sg,adiabaticity"
    assert len(lines) == 18
    kn = [float(l.split(",")[3]) for l in lines[1:]]
    assert all(abs(x + 0.5) < 1e-12 for x in kn)
    man = json.loads((out / "manifest.json").read_text())
    assert man["warnings"] and "V_sg" in man["warnings"][0]
    assert set(man["outputs"]) == {"describe.csv"}


def test_console_script_runs(tmp_path):
    cfg = _write(tmp_path, {"run": "convention-report"})
    r = subprocess.run(
        [sys.executable, "-m", "dspin.cli", "convention-report", "--config", cfg, "--out", str(tmp_path / "o")],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0, r.stderr
    rep = json.loads((tmp_path / "o" / "conventions.json").read_text())
    assert rep["discrepancy_count"] == 2
