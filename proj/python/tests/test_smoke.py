import math

import numpy as np
import pytest

import dkspde

CONFIG = """
seed = 4
[model]
preset = power-law-dk
m = 1
[grid]
n = 32
[solver]
dt = 1e-3
t_end = 0.05
[noise]
f_count = 2
f_amplitude = 0.1
"""


def test_presets():
    assert "power-law-dk" in dkspde.preset_names()


def test_theta_closed_form():
    assert dkspde.theta("power-law-dk", {"m": 1.0}, 2.0, 4.0) == pytest.approx(4.0)


def test_grid():
    g = dkspde.GridSpec(2, 16)
    assert g.size == 256
    assert g.dx == pytest.approx(2 * math.pi / 16)
    with pytest.raises(dkspde.ConfigError):
        dkspde.GridSpec(1, 3)


def test_simulate_conserves_mass():
    rho0 = dkspde.initial_state(CONFIG)
    out = dkspde.simulate(CONFIG)
    assert not out["truncated"]
    dx = 2 * math.pi / 32
    assert np.sum(out["final"]) * dx == pytest.approx(np.sum(rho0) * dx, rel=1e-12)
    again = dkspde.simulate(CONFIG, rho0)
    assert np.array_equal(again["final"], out["final"])
    assert out["diagnostics_csv"].startswith("step,time,mass")


def test_couple_contracts():
    out = dkspde.couple(CONFIG)
    d = out["distance"]
    assert len(d) == len(out["times"]) == 51
    assert all(b <= a * (1 + 1e-12) for a, b in zip(d, d[1:]))


def test_config_errors():
    with pytest.raises(dkspde.ConfigError, match="sigma"):
        dkspde.resolve_config(CONFIG + "sigm = zero\n")


def test_assumption_rows():
    rows = dkspde.check_assumptions("power-law-dk", {"m": 1.0})
    assert rows and all(r["status"] in {"pass", "fail", "undetermined", "info"} for r in rows)


def test_cli(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(CONFIG)
    assert dkspde.run_cli(["simulate", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "diagnostics.csv").exists()
