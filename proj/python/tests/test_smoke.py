import json
import math
from pathlib import Path

import numpy as np
import pytest

import scbl

CONFIGS = Path(__file__).resolve().parents[2] / "configs"

LANDAU = {
    "geometry": {"d": 2, "lengths": [1, 1]},
    "field": {"B.12": 2 * math.pi},
    "phi": {"family": "exponential", "rate": 1},
}


def test_version_and_commands():
    assert scbl.__version__
    assert "verify-all" in scbl.command_names()


def test_normalize_fills_defaults():
    doc = scbl.normalize_config(LANDAU)
    assert doc["engine"]["kpm_order"] == 128


def test_bad_config_raises():
    with pytest.raises(scbl.ConfigError):
        scbl.normalize_config({"geometry": {"d": 2, "lengths": [1, 1]}})
    with pytest.raises(scbl.ScblError):
        scbl.normalize_config(dict(LANDAU, phii={}))


def test_landau_spectrum_starts_near_two_pi():
    ev = scbl.operator_spectrum(LANDAU, 8)
    assert isinstance(ev, np.ndarray)
    assert np.all(np.diff(ev) >= -1e-12)
    assert ev[0] == pytest.approx(2 * math.pi, rel=0.03)


def test_fit_recovers_coefficients():
    p = [8, 12, 16, 24]
    values = [2 + 3 / math.sqrt(q) for q in p]
    fit = scbl.fit_expansion(p, values, 1)
    assert fit["coefficients"] == pytest.approx([2, 3], abs=1e-9)


def test_model_f0_closed_form():
    skew = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert scbl.model_f0(skew, json.dumps(LANDAU)) == pytest.approx(1 / (4 * math.pi * math.sinh(1)), rel=1e-9)


def test_trace_sweep_matches_leading_term():
    rows = scbl.trace_sweep(LANDAU, [8])
    lead = scbl.leading_integral(LANDAU)
    assert rows[0]["p"] == 8
    assert rows[0]["value"] == pytest.approx(lead, rel=0.05)


def test_run_command_writes_outputs(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(dict(LANDAU, sweep={"p_list": [8], "j": 0})))
    code, _, err = scbl.run_command("trace-sweep", cfg, out=tmp_path / "out")
    assert code == 0, err
    assert (tmp_path / "out" / "sweep.csv").read_text().startswith("p,")
    code, _, _ = scbl.run_command("nope", cfg)
    assert code == 2


def test_criterion_report():
    report = scbl.run_criterion(5, CONFIGS)
    assert report["criteria"][0]["id"] == 5
    assert report["criteria"][0]["passed"]
