import json

import numpy as np
import pytest

from spectral_boltzmann.cli import main
from spectral_boltzmann.config import BUNDLED, bundled_config, load_config, parse_config
from spectral_boltzmann.errors import ParseError, ValidationError
from spectral_boltzmann.scenarios import (build_model, emit_slice, read_profile,
                                          resolve_state, run_scenario, write_profile)

BASE = {
    "name": "tiny",
    "mode": "homogeneous",
    "gas": {"model": "hard_sphere", "species": [
        {"name": "Ne", "mass": 3.35e-26, "diameter": 2.77e-10},
        {"name": "Ar", "mass": 6.63e-26, "diameter": 4.17e-10}]},
    "grid": {"nv": 8, "lv": 2000.0},
    "numerics": {"dt_c": 1e-9, "steps": 4},
    "initial": {"rho": [5e-3, 2e-3], "T": [300.0, 500.0]},
    "output": {"every": 2, "slice_every": 4},
}

TOML = """
name = "tiny"
mode = "homogeneous"
[gas]
model = "hard_sphere"
species = [{ name = "Ne", mass = 3.35e-26, diameter = 2.77e-10 },
           { name = "Ar", mass = 6.63e-26, diameter = 4.17e-10 }]
[grid]
nv = 8
lv = 2000.0
[numerics]
dt_c = 1e-9
steps = 4
[initial]
rho = [5e-3, 2e-3]
T = [300.0, 500.0]
[output]
every = 2
"""


@pytest.mark.parametrize("name", BUNDLED)
@pytest.mark.parametrize("fast", [False, True])
def test_bundled_configs_parse(name, fast):
    cfg = bundled_config(name, fast=fast)
    assert cfg.name == name
    model = build_model(cfg)
    state = cfg.initial if cfg.mode == "homogeneous" else cfg.upstream
    rho_i, T, V = resolve_state(state, model, "state")
    assert len(rho_i) == model.ns


def test_bundled_values():
    full = bundled_config("ne_ar_relaxation")
    assert (full.grid.nv, full.grid.lv, full.numerics.dt_c, full.numerics.steps) == \
        (24, 3000.0, 1e-9, 300)
    shock = bundled_config("multilevel_shock")
    assert (shock.grid.nv, shock.grid.lv, shock.grid.nx) == (30, 3400.0, 201)
    assert shock.numerics.cfl == 0.5
    assert bundled_config("ne_ar_shock", fast=True).grid.nv == 16


@pytest.mark.parametrize("path, patch, where", [
    ("grid.nv", {"grid": {"nv": 7, "lv": 1.0}}, "grid.nv"),
    ("numerics.cfl", {"numerics": {"dt_c": 1e-9, "cfl": 2.0}}, "numerics.cfl"),
    ("unknown", {"bogus": 1}, "bogus"),
    ("species", {"gas": {"model": "hard_sphere", "species": [{"name": "x", "mass": -1.0,
                                                              "diameter": 1e-10}]}},
     "gas.species[0].mass"),
    ("rho length", {"initial": {"rho": [1.0], "T": 300.0}}, "initial.rho"),
    ("mode", {"mode": "sideways"}, "mode"),
])
def test_validation_errors_name_field(path, patch, where):
    data = {**BASE, **patch}
    with pytest.raises(ValidationError) as exc:
        parse_config(data)
    assert exc.value.path == where


def test_fast_overrides_and_nv():
    data = {**BASE, "fast": {"grid": {"nv": 6}}}
    assert parse_config(data).grid.nv == 8
    assert parse_config(data, fast=True).grid.nv == 6
    assert parse_config(data, fast=True, nv=10).grid.nv == 10


def test_parse_error(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("name = [")
    with pytest.raises(ParseError):
        load_config(bad)
    with pytest.raises(ParseError):
        load_config(tmp_path / "missing.toml")


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(TOML.replace("nv = 8", "nv = 7"))
    assert main(["solve", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "grid.nv" in capsys.readouterr().err
    blow = tmp_path / "blow.toml"
    blow.write_text(TOML.replace("dt_c = 1e-9", "dt_c = 1e-3"))
    assert main(["solve", str(blow), "--out", str(tmp_path / "b")]) == 3
    manifest = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert manifest["status"] == "failed"


def test_cli_solve_and_outputs(tmp_path):
    cfg = tmp_path / "tiny.toml"
    cfg.write_text(TOML)
    out = tmp_path / "run"
    assert main(["solve", str(cfg), "--out", str(out), "--threads", "1"]) == 0
    lines = (out / "history.csv").read_text().splitlines()
    assert lines[0].startswith("# units:")
    assert lines[1] == "t,rho_1,rho_2,rho,Vx,T,Tint,T1,T2"
    rows = np.loadtxt(out / "history.csv", delimiter=",", skiprows=2)
    assert rows.shape == (3, 9)
    assert np.allclose(rows[:, 3], rows[0, 3], rtol=1e-12)
    m = json.loads((out / "manifest.json").read_text())
    assert m["status"] == "ok" and m["steps"] == 4
    assert m["config"]["grid"]["nv"] == 8
    assert {"numpy", "scipy", "numba", "package"} <= set(m["versions"])


def test_cli_precompute(tmp_path, capsys):
    cfg = tmp_path / "tiny.toml"
    cfg.write_text(TOML)
    assert main(["weights", "precompute", str(cfg), "--cache-dir", str(tmp_path / "c")]) == 0
    path = capsys.readouterr().out.strip()
    assert path.endswith(".bin") and (tmp_path / "c").exists()


def test_slice_and_profile_io(tmp_path, phase8, ne_ar, rng):
    f = rng.random((2, 8, 8, 8))
    p = emit_slice(f, 1, "y", phase8, tmp_path / "s.csv", through=(2, 5))
    data = np.loadtxt(p, delimiter=",", skiprows=2)
    assert np.allclose(data[:, 0], phase8.velocity.axis)
    assert np.allclose(data[:, 1], f[1, 2, :, 5])
    with pytest.raises(IndexError):
        emit_slice(f, 2, "x", phase8, tmp_path / "bad.csv")
    with pytest.raises(IndexError):
        emit_slice(f, 0, "x", phase8, tmp_path / "bad.csv", through=(0, 9))

    from spectral_boltzmann.moments import compute_moments
    from spectral_boltzmann.equilibrium import maxwellian_on_grid
    cells = np.stack([maxwellian_on_grid([1e-4, 2e-4], t, 300.0, ne_ar.masses, phase8)
                      for t in (300.0, 400.0, 500.0)])
    x = np.array([-1.0, 0.0, 1.0])
    path = write_profile(tmp_path / "p.csv", x, compute_moments(cells, ne_ar, phase8), 2)
    cols, rows = read_profile(path)
    assert cols[:3] == ["x", "rho_1", "rho_2"] and cols[-3:] == ["p", "tau_xx", "q_x"]
    assert rows.shape == (3, len(cols))


def test_align_shock_cli(tmp_path):
    from spectral_boltzmann.scenarios import _write_csv, profile_columns
    cols = profile_columns(1)
    x = np.linspace(-1, 1, 41)
    rho = 1 + 1 / (1 + np.exp(-(x - 0.25) / 0.05))
    rows = np.zeros((41, len(cols)))
    rows[:, 0], rows[:, 1] = x, rho
    src = _write_csv(tmp_path / "p.csv", cols, rows, ["-"] * len(cols))
    assert main(["postprocess", "align-shock", str(src)]) == 0
    _, out = read_profile(tmp_path / "p_aligned.csv")
    assert out[np.argmin(np.abs(out[:, 1] - 1.5)), 0] == pytest.approx(0.0, abs=0.05)


def test_shock_scenario_smoke(tmp_path):
    data = {
        "name": "tiny_shock", "mode": "shock",
        "gas": BASE["gas"],
        "grid": {"nv": 8, "lv": 2400.0, "nx": 21, "l_minus": 2e-2, "l_plus": 2e-2},
        "numerics": {"dt_c": 1e-6, "cfl": 0.5, "steps": 3},
        "upstream": {"rho": 1e-4, "T": 300.0, "V": 744.0, "mass_fractions": [0.34, 0.66]},
        "output": {"every": 1, "slice_positions": [0.0]},
    }
    art = run_scenario(parse_config(data), out_dir=tmp_path)
    cols, rows = read_profile(art.profile)
    assert rows.shape[0] == 20
    assert art.profile_aligned is not None and art.slices
    res = np.loadtxt(art.residual, delimiter=",", skiprows=2)
    assert res.shape == (3, 4)
