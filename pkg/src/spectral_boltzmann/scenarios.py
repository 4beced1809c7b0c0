"""Scenario orchestration: build the solver from a config, march, write artifacts.

Artifacts written to the output directory:

``history.csv`` (homogeneous runs)
    ``t, rho_1..rho_Ns, rho, Vx, T, Tint, T1..TNs``
``residual.csv`` (shock runs)
    ``step, t, residual, neg_fraction``
``profile.csv`` / ``profile_aligned.csv`` (shock runs)
    ``x, rho_1.., Vx_1.., Vdiff_1.., Tx, Ty, Tz, T, Tint, p, tau_xx, q_x``
``slice_*.csv``
    two columns ``v_<axis>, f`` through the grid centre
``manifest.json``
    config echo, package versions, wall time and run status

Every CSV starts with a ``# units:`` comment line followed by the header row.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .collision import CollisionOperator
from .config import ScenarioConfig
from .equilibrium import EquilibriumState, boltzmann_populations, maxwellian_on_grid, \
    post_shock_state
from .errors import ValidationError
from .grid import build_phase_space
from .model import GasModel, SpeciesLevel, build_collision_catalog
from .moments import compute_moments
from .transport import (LIMITERS, apply_boundary_conditions, advance, align_shock,
                        build_spatial_grid, compute_time_step, steady_residual)
from .weights import DEALIASED, QuadratureRule, cached_tables

__all__ = ["RunArtifacts", "build_model", "resolve_state", "build_solver", "run_scenario",
           "emit_slice", "write_profile", "read_profile", "default_cache_dir"]

log = logging.getLogger(__name__)

_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass
class RunArtifacts:
    out_dir: Path
    manifest: Path
    history: Path = None
    profile: Path = None
    profile_aligned: Path = None
    residual: Path = None
    slices: list = field(default_factory=list)
    f: np.ndarray = None
    times: np.ndarray = None
    history_rows: np.ndarray = None
    history_columns: list = None
    profile_rows: np.ndarray = None
    profile_columns: list = None
    steps: int = 0
    wall_time: float = 0.0


def default_cache_dir():
    env = os.environ.get("SPECTRAL_BOLTZMANN_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "spectral_boltzmann"


def build_model(cfg: ScenarioConfig) -> GasModel:
    gas = cfg.gas
    if gas.model == "hard_sphere":
        return GasModel.hard_sphere_mixture(
            SpeciesLevel(s.name, s.mass, s.diameter) for s in gas.species)
    lv = gas.levels
    return GasModel.multilevel(lv.mass, lv.diameter, lv.degeneracies, lv.energies, lv.names)


def resolve_state(state, model: GasModel, path: str):
    """Per-species densities, temperatures and the x-velocity of a state block."""
    ns = model.ns
    if isinstance(state.rho, list):
        rho_i = np.array(state.rho)
    elif state.mass_fractions is not None:
        rho_i = state.rho * np.array(state.mass_fractions)
    elif model.has_internal_energy:
        t_int = state.T_int if state.T_int is not None else (
            state.T if not isinstance(state.T, list) else None)
        if t_int is None:
            raise ValidationError(f"{path}.T_int", "needed to populate the levels")
        rho_i = boltzmann_populations(state.rho, t_int, model)
    elif ns == 1:
        rho_i = np.array([state.rho])
    else:
        raise ValidationError(f"{path}.mass_fractions", "needed to split a mixture total")
    T = np.array(state.T) if isinstance(state.T, list) else np.full(ns, state.T)
    return rho_i, T, float(state.V)


def _species_field(rho_i, T, V, model, phase):
    return np.concatenate([maxwellian_on_grid([r], t, V, [m], phase)
                           for r, t, m in zip(rho_i, T, model.masses)])


def build_solver(cfg: ScenarioConfig, progress=None):
    """Phase space, model, weight tables and collision operator of a scenario."""
    model = build_model(cfg)
    phase = build_phase_space(cfg.grid.nv, cfg.grid.lv)
    num = cfg.numerics
    if num.threads:
        import numba
        numba.set_num_threads(min(num.threads, numba.config.NUMBA_NUM_THREADS))
    cache = Path(num.cache_dir) if num.cache_dir else default_cache_dir()
    rule = QuadratureRule(order=num.quadrature_order)
    factor = num.umax_factor if num.umax_factor is not None else DEALIASED
    tables = cached_tables(phase, build_collision_catalog(model), model, rule, cache,
                           progress=progress, umax_factor=factor)
    op = CollisionOperator(phase, model, tables, clipping=num.clipping, batch=num.batch)
    return model, phase, tables, op


# ---------------------------------------------------------------------------
# output helpers


def _write_csv(path, columns, rows, units):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write("# units: " + ", ".join(units) + "\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(float(v)) for v in r])
    return path


def emit_slice(f_cell, species: int, axis: str, phase, path, through=None):
    """Write the 1-D cut of ``f_cell[species]`` along ``axis`` as ``v_<axis>, f``.

    ``through`` gives the two fixed node indices of the other axes (default:
    the node at zero velocity, index ``N/2``).
    """
    n = phase.nv
    if axis not in _AXES:
        raise IndexError(f"unknown axis {axis!r}")
    if not 0 <= species < f_cell.shape[0]:
        raise IndexError(f"species index {species} out of range")
    through = (n // 2, n // 2) if through is None else tuple(through)
    if len(through) != 2 or not all(0 <= t < n for t in through):
        raise IndexError(f"node indices {through} out of range")
    a = _AXES[axis]
    idx = [None, None, None]
    others = [d for d in range(3) if d != a]
    idx[others[0]], idx[others[1]] = through
    idx[a] = slice(None)
    values = f_cell[species][tuple(idx)]
    rows = np.column_stack([phase.velocity.axis, values])
    return _write_csv(path, [f"v_{axis}", "f"], rows, ["m/s", "s^3/m^6"])


def _history_row(t, m, ns):
    return [t, *m.rho_i, m.rho, m.V[0], m.T, m.T_int, *m.T_i]


def _history_columns(ns):
    return (["t"] + [f"rho_{i + 1}" for i in range(ns)] + ["rho", "Vx", "T", "Tint"]
            + [f"T{i + 1}" for i in range(ns)])


def _history_units(ns):
    return ["s"] + ["kg/m^3"] * (ns + 1) + ["m/s", "K", "K"] + ["K"] * ns


def profile_columns(ns):
    return (["x"] + [f"rho_{i + 1}" for i in range(ns)] + [f"Vx_{i + 1}" for i in range(ns)]
            + [f"Vdiff_{i + 1}" for i in range(ns)]
            + ["Tx", "Ty", "Tz", "T", "Tint", "p", "tau_xx", "q_x"])


def _profile_units(ns):
    return (["m"] + ["kg/m^3"] * ns + ["m/s"] * (2 * ns)
            + ["K"] * 5 + ["Pa", "Pa", "W/m^2"])


def profile_rows(x, m):
    return np.column_stack([x, m.rho_i, m.V_i[..., 0], m.V_diff[..., 0], m.T_alpha, m.T,
                            m.T_int, m.p, m.tau[..., 0, 0], m.q[..., 0]])


def write_profile(path, x, moments, ns):
    return _write_csv(path, profile_columns(ns), profile_rows(x, moments), _profile_units(ns))


def read_profile(path):
    """Read a profile CSV; returns ``(columns, rows)``."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    columns = next(reader)
    rows = np.array([[float(v) for v in r] for r in reader])
    return columns, rows


def _manifest(cfg, art, status, extra):
    import numba
    import scipy
    data = {
        "status": status,
        "config": cfg.to_dict(),
        "versions": {"package": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__,
                     "numba": numba.__version__},
        "threads": numba.get_num_threads(),
        "wall_time_s": art.wall_time,
        "steps": art.steps,
    }
    data.update(extra)
    with open(art.manifest, "w") as fh:
        json.dump(data, fh, indent=2, default=str)


# ---------------------------------------------------------------------------
# runs


def run_scenario(cfg: ScenarioConfig, out_dir=None, progress=None) -> RunArtifacts:
    """Run a scenario and write its artifacts; partial outputs are flushed on failure."""
    out = Path(out_dir if out_dir is not None else cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    art = RunArtifacts(out_dir=out, manifest=out / "manifest.json")
    t0 = time.perf_counter()
    extra = {}
    status = "failed"
    try:
        model, phase, tables, op = build_solver(cfg)
        if cfg.mode == "homogeneous":
            _run_homogeneous(cfg, model, phase, op, art, extra, progress)
        else:
            _run_shock(cfg, model, phase, op, art, extra, progress)
        status = "ok"
        return art
    finally:
        art.wall_time = time.perf_counter() - t0
        _manifest(cfg, art, status, extra)


def _run_homogeneous(cfg, model, phase, op, art, extra, progress):
    ns = model.ns
    rho_i, T, V = resolve_state(cfg.initial, model, "initial")
    f = _species_field(rho_i, T, V, model, phase)
    num = cfg.numerics
    dt = compute_time_step(num.dt_c, num.cfl, phase.lv)
    ceiling = num.blowup_ceiling * np.abs(f).max()
    rows, times = [], []
    slices = []

    def record(step):
        m = compute_moments(f, model, phase)
        rows.append(_history_row(step * dt, m, ns))
        times.append(step * dt)
        se = cfg.output.slice_every
        if (se and step % se == 0) or step == num.steps:
            for s in range(ns):
                p = art.out_dir / f"slice_{model.names[s]}_step{step:06d}.csv"
                slices.append(emit_slice(f, s, cfg.output.slice_axis, phase, p))

    record(0)
    try:
        for step in range(1, num.steps + 1):
            f = advance(f, dt, op, ceiling=ceiling)
            art.steps = step
            if step % cfg.output.every == 0 or step == num.steps:
                record(step)
            if progress:
                progress(step, num.steps)
    finally:
        art.history = _write_csv(art.out_dir / "history.csv", _history_columns(ns), rows,
                                 _history_units(ns))
        art.history_rows = np.array(rows)
        art.history_columns = _history_columns(ns)
        art.times = np.array(times)
        art.slices = slices
        art.f = f
        extra.update(dt=dt, imag_ratio=op.last_imag_ratio)


def _run_shock(cfg, model, phase, op, art, extra, progress):
    ns = model.ns
    g = cfg.grid
    grid = build_spatial_grid(g.nx, g.l_minus, g.l_plus)
    rho_u, T_u, V_u = resolve_state(cfg.upstream, model, "upstream")
    if cfg.downstream is not None:
        rho_d, T_d, V_d = resolve_state(cfg.downstream, model, "downstream")
    else:
        if not np.allclose(T_u, T_u[0]):
            raise ValidationError("upstream.T", "post-shock state needs one temperature")
        ps = post_shock_state(EquilibriumState(tuple(rho_u), float(T_u[0]), V_u), model)
        rho_d, T_d, V_d = np.array(ps.rho_i), np.full(ns, ps.T), ps.V
    f_up = _species_field(rho_u, T_u, V_u, model, phase)
    f_dn = _species_field(rho_d, T_d, V_d, model, phase)
    nc = grid.ncells
    f = np.empty((nc + 4,) + f_up.shape)
    x = grid.centroids
    f[2:-2] = np.where((x <= 0)[:, None, None, None, None], f_up, f_dn)
    apply_boundary_conditions(f, f_up, f_dn)

    num = cfg.numerics
    dt = compute_time_step(num.dt_c, num.cfl, phase.lv, grid.volumes)
    vx = phase.velocity.mesh[0]
    limiter = LIMITERS[num.limiter]
    ceiling = num.blowup_ceiling * np.abs(f).max()
    res_rows = []
    extra.update(dt=dt, upstream=dict(rho_i=rho_u.tolist(), T=T_u.tolist(), V=V_u),
                 downstream=dict(rho_i=np.asarray(rho_d).tolist(), T=np.asarray(T_d).tolist(),
                                 V=V_d))
    try:
        for step in range(1, num.steps + 1):
            new = advance(f, dt, op, grid=grid, vx=vx, limiter=limiter, ceiling=ceiling)
            res = steady_residual(new, f, dt, grid)
            f = new
            art.steps = step
            if step % cfg.output.every == 0 or step == num.steps:
                inner = f[grid.interior]
                neg = float((inner < 0).sum() / inner.size)
                res_rows.append([step, step * dt, res, neg])
                log.info("step %d residual %.3e", step, res)
            if progress:
                progress(step, num.steps)
            if num.steady_tol and res < num.steady_tol:
                res_rows.append([step, step * dt, res, float((f[grid.interior] < 0).mean())])
                break
    finally:
        art.residual = _write_csv(art.out_dir / "residual.csv",
                                  ["step", "t", "residual", "neg_fraction"], res_rows,
                                  ["-", "s", "1/s", "-"])
        inner = f[grid.interior]
        m = compute_moments(inner, model, phase)
        art.profile = write_profile(art.out_dir / "profile.csv", x, m, ns)
        art.profile_rows = profile_rows(x, m)
        art.profile_columns = profile_columns(ns)
        try:
            xs, x0 = align_shock(x, m.rho, rho_u.sum(), float(np.sum(rho_d)))
            art.profile_aligned = write_profile(art.out_dir / "profile_aligned.csv", xs, m, ns)
            extra["shock_offset_m"] = x0
        except ValueError:
            pass
        art.f = f
        positions = cfg.output.slice_positions or []
        for pos in positions:
            c = int(np.argmin(np.abs(x - pos)))
            for s in range(ns):
                p = art.out_dir / f"slice_{model.names[s]}_x{pos:+.4e}.csv"
                art.slices.append(emit_slice(inner[c], s, cfg.output.slice_axis, phase, p))
        extra.update(imag_ratio=op.last_imag_ratio)
