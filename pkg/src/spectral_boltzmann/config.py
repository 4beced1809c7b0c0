"""Scenario configuration files (TOML).

A scenario file has the top-level keys ``name`` and ``mode`` and the tables
``gas``, ``grid``, ``numerics``, ``initial`` (homogeneous runs), ``upstream`` /
``downstream`` (shock runs), ``output`` and an optional ``fast`` table whose
sub-tables override the others when the desk-scale variant is requested.
Unknown keys are rejected; every error names the offending field path.
"""

from __future__ import annotations

import copy
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ParseError, ValidationError

__all__ = [
    "SpeciesConfig", "LevelsConfig", "GasConfig", "GridConfig", "NumericsConfig",
    "StateConfig", "OutputConfig", "ScenarioConfig", "load_config", "parse_config",
    "bundled_config", "BUNDLED",
]

CONFIG_DIR = Path(__file__).parent / "configs"
BUNDLED = ("ne_ar_relaxation", "multilevel_relaxation", "ne_ar_shock", "multilevel_shock")


@dataclass
class SpeciesConfig:
    name: str
    mass: float
    diameter: float


@dataclass
class LevelsConfig:
    mass: float
    diameter: float
    degeneracies: list
    energies: list
    names: Optional[list] = None


@dataclass
class GasConfig:
    model: str
    species: Optional[list] = None
    levels: Optional[LevelsConfig] = None


@dataclass
class GridConfig:
    nv: int
    lv: float
    nx: Optional[int] = None
    l_minus: Optional[float] = None
    l_plus: Optional[float] = None


@dataclass
class NumericsConfig:
    dt_c: float
    cfl: float = 1.0
    limiter: str = "van_albada"
    steps: int = 100
    steady_tol: float = 0.0
    quadrature_order: int = 64
    umax_factor: Optional[float] = None
    clipping: str = "symmetric"
    threads: int = 0
    batch: int = 32
    blowup_ceiling: float = 1e3
    cache_dir: Optional[str] = None


@dataclass
class StateConfig:
    """Uniform state. ``rho`` is a per-species list or a mixture total.

    A total needs either ``mass_fractions`` or, for level gases, Boltzmann
    populations at ``T_int`` (defaults to ``T``).
    """

    rho: object
    T: object
    V: float = 0.0
    T_int: Optional[float] = None
    mass_fractions: Optional[list] = None


@dataclass
class OutputConfig:
    directory: str = "output"
    every: int = 10
    slice_axis: str = "x"
    slice_every: int = 0
    slice_positions: Optional[list] = None


@dataclass
class ScenarioConfig:
    name: str
    mode: str
    gas: GasConfig
    grid: GridConfig
    numerics: NumericsConfig
    output: OutputConfig
    initial: Optional[StateConfig] = None
    upstream: Optional[StateConfig] = None
    downstream: Optional[StateConfig] = None
    source: Optional[str] = None
    fast: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# validation helpers

_NUM = (int, float)


def _check_keys(table, allowed, path):
    if not isinstance(table, dict):
        raise ValidationError(path or "<root>", "expected a table")
    for key in table:
        if key not in allowed:
            raise ValidationError(f"{path}.{key}" if path else key, "unknown key")


def _get(table, key, path, kind, required=True, default=None, positive=False,
         nonneg=False, choices=None):
    full = f"{path}.{key}" if path else key
    if key not in table:
        if required:
            raise ValidationError(full, "missing required value")
        return default
    val = table[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, _NUM):
            raise ValidationError(full, f"expected a number, got {val!r}")
        val = float(val)
    elif kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ValidationError(full, f"expected an integer, got {val!r}")
    elif kind is str:
        if not isinstance(val, str):
            raise ValidationError(full, f"expected a string, got {val!r}")
    elif kind is list:
        if not isinstance(val, list):
            raise ValidationError(full, f"expected a list, got {val!r}")
    elif kind == "num_or_list":
        if isinstance(val, list):
            if not val or not all(isinstance(v, _NUM) and not isinstance(v, bool) for v in val):
                raise ValidationError(full, "expected a non-empty list of numbers")
            val = [float(v) for v in val]
        elif isinstance(val, _NUM) and not isinstance(val, bool):
            val = float(val)
        else:
            raise ValidationError(full, f"expected a number or list, got {val!r}")
    vals = val if isinstance(val, list) else [val]
    if positive and not all(isinstance(v, _NUM) and v > 0 for v in vals):
        raise ValidationError(full, "must be positive")
    if nonneg and not all(isinstance(v, _NUM) and v >= 0 for v in vals):
        raise ValidationError(full, "must be non-negative")
    if choices is not None and val not in choices:
        raise ValidationError(full, f"must be one of {sorted(choices)}")
    return val


def _num_list(table, key, path, positive=False, nonneg=False, required=True):
    vals = _get(table, key, path, list, required=required)
    if vals is None:
        return None
    for n, v in enumerate(vals):
        if isinstance(v, bool) or not isinstance(v, _NUM):
            raise ValidationError(f"{path}.{key}[{n}]", "expected a number")
        if positive and not v > 0:
            raise ValidationError(f"{path}.{key}[{n}]", "must be positive")
        if nonneg and not v >= 0:
            raise ValidationError(f"{path}.{key}[{n}]", "must be non-negative")
    return [float(v) for v in vals]


def _parse_gas(t):
    _check_keys(t, {"model", "species", "levels"}, "gas")
    model = _get(t, "model", "gas", str, choices={"hard_sphere", "anderson"})
    if model == "hard_sphere":
        raw = _get(t, "species", "gas", list)
        if not raw:
            raise ValidationError("gas.species", "at least one species is required")
        species = []
        for n, s in enumerate(raw):
            p = f"gas.species[{n}]"
            _check_keys(s, {"name", "mass", "diameter"}, p)
            species.append(SpeciesConfig(_get(s, "name", p, str),
                                         _get(s, "mass", p, float, positive=True),
                                         _get(s, "diameter", p, float, positive=True)))
        if "levels" in t:
            raise ValidationError("gas.levels", "not used by the hard_sphere model")
        return GasConfig(model, species=species)
    lv = _get(t, "levels", "gas", dict)
    p = "gas.levels"
    _check_keys(lv, {"mass", "diameter", "degeneracies", "energies", "names"}, p)
    deg = _get(lv, "degeneracies", p, list)
    for n, g in enumerate(deg):
        if isinstance(g, bool) or not isinstance(g, int) or g < 1:
            raise ValidationError(f"{p}.degeneracies[{n}]", "must be an integer >= 1")
    energies = _num_list(lv, "energies", p, nonneg=True)
    if len(energies) != len(deg):
        raise ValidationError(f"{p}.energies", "length differs from degeneracies")
    names = _get(lv, "names", p, list, required=False)
    if names is not None and len(names) != len(deg):
        raise ValidationError(f"{p}.names", "length differs from degeneracies")
    if "species" in t:
        raise ValidationError("gas.species", "not used by the anderson model")
    return GasConfig(model, levels=LevelsConfig(_get(lv, "mass", p, float, positive=True),
                                                _get(lv, "diameter", p, float, positive=True),
                                                list(deg), energies, names))


def _parse_grid(t, mode):
    p = "grid"
    _check_keys(t, {"nv", "lv", "nx", "l_minus", "l_plus"}, p)
    nv = _get(t, "nv", p, int)
    if nv < 4 or nv % 2:
        raise ValidationError("grid.nv", "must be an even integer >= 4")
    g = GridConfig(nv, _get(t, "lv", p, float, positive=True))
    if mode == "shock":
        g.nx = _get(t, "nx", p, int)
        if g.nx < 6:
            raise ValidationError("grid.nx", "must be at least 6")
        g.l_minus = _get(t, "l_minus", p, float, positive=True)
        g.l_plus = _get(t, "l_plus", p, float, positive=True)
    else:
        for k in ("nx", "l_minus", "l_plus"):
            if k in t:
                raise ValidationError(f"grid.{k}", "only valid in shock mode")
    return g


def _parse_numerics(t):
    p = "numerics"
    allowed = set(NumericsConfig.__dataclass_fields__)
    _check_keys(t, allowed, p)
    n = NumericsConfig(_get(t, "dt_c", p, float, positive=True))
    n.cfl = _get(t, "cfl", p, float, required=False, default=n.cfl, positive=True)
    if n.cfl > 1:
        raise ValidationError("numerics.cfl", "must lie in (0, 1]")
    n.limiter = _get(t, "limiter", p, str, required=False, default=n.limiter,
                     choices={"van_albada", "minmod"})
    n.steps = _get(t, "steps", p, int, required=False, default=n.steps, nonneg=True)
    n.steady_tol = _get(t, "steady_tol", p, float, required=False, default=n.steady_tol,
                        nonneg=True)
    n.quadrature_order = _get(t, "quadrature_order", p, int, required=False,
                              default=n.quadrature_order, positive=True)
    n.umax_factor = _get(t, "umax_factor", p, float, required=False, positive=True)
    n.clipping = _get(t, "clipping", p, str, required=False, default=n.clipping,
                      choices={"symmetric", "box"})
    n.threads = _get(t, "threads", p, int, required=False, default=n.threads, nonneg=True)
    n.batch = _get(t, "batch", p, int, required=False, default=n.batch, positive=True)
    n.blowup_ceiling = _get(t, "blowup_ceiling", p, float, required=False,
                            default=n.blowup_ceiling, positive=True)
    n.cache_dir = _get(t, "cache_dir", p, str, required=False)
    return n


def _parse_state(t, p, ns):
    _check_keys(t, {"rho", "T", "V", "T_int", "mass_fractions"}, p)
    rho = _get(t, "rho", p, "num_or_list", positive=True)
    T = _get(t, "T", p, "num_or_list", positive=True)
    for key, val in (("rho", rho), ("T", T)):
        if isinstance(val, list) and len(val) != ns:
            raise ValidationError(f"{p}.{key}", f"expected {ns} values")
    s = StateConfig(rho, T, _get(t, "V", p, float, required=False, default=0.0),
                    _get(t, "T_int", p, float, required=False, positive=True),
                    _num_list(t, "mass_fractions", p, nonneg=True, required=False))
    if s.mass_fractions is not None:
        if len(s.mass_fractions) != ns:
            raise ValidationError(f"{p}.mass_fractions", f"expected {ns} values")
        if abs(sum(s.mass_fractions) - 1.0) > 1e-9:
            raise ValidationError(f"{p}.mass_fractions", "must sum to 1")
        if isinstance(rho, list):
            raise ValidationError(f"{p}.mass_fractions", "needs a scalar total rho")
    return s


def _parse_output(t):
    p = "output"
    _check_keys(t, set(OutputConfig.__dataclass_fields__), p)
    o = OutputConfig()
    o.directory = _get(t, "directory", p, str, required=False, default=o.directory)
    o.every = _get(t, "every", p, int, required=False, default=o.every, positive=True)
    o.slice_axis = _get(t, "slice_axis", p, str, required=False, default=o.slice_axis,
                        choices={"x", "y", "z"})
    o.slice_every = _get(t, "slice_every", p, int, required=False, default=o.slice_every,
                         nonneg=True)
    o.slice_positions = _num_list(t, "slice_positions", p, required=False)
    return o


def _merge(base, over, path="fast"):
    for key, val in over.items():
        if isinstance(val, dict):
            if key not in base or not isinstance(base[key], dict):
                base[key] = {}
            _merge(base[key], val, f"{path}.{key}")
        else:
            base[key] = val
    return base


def parse_config(data: dict, fast: bool = False, nv: int = None, source=None) -> ScenarioConfig:
    """Validate a parsed TOML document."""
    data = copy.deepcopy(data)
    top = {"name", "mode", "gas", "grid", "numerics", "initial", "upstream", "downstream",
           "output", "fast"}
    _check_keys(data, top, "")
    fast_tbl = data.pop("fast", {})
    _check_keys(fast_tbl, top - {"fast", "name", "mode"}, "fast")
    if fast:
        _merge(data, fast_tbl)
    if nv is not None:
        data.setdefault("grid", {})["nv"] = int(nv)
    name = _get(data, "name", "", str, required=False, default="scenario")
    mode = _get(data, "mode", "", str, choices={"homogeneous", "shock"})
    gas = _parse_gas(_get(data, "gas", "", dict))
    ns = len(gas.species) if gas.species is not None else len(gas.levels.energies)
    grid = _parse_grid(_get(data, "grid", "", dict), mode)
    numerics = _parse_numerics(_get(data, "numerics", "", dict))
    output = _parse_output(data.get("output", {}))
    cfg = ScenarioConfig(name, mode, gas, grid, numerics, output, source=source, fast=fast)
    if mode == "homogeneous":
        cfg.initial = _parse_state(_get(data, "initial", "", dict), "initial", ns)
        for k in ("upstream", "downstream"):
            if k in data:
                raise ValidationError(k, "only valid in shock mode")
    else:
        cfg.upstream = _parse_state(_get(data, "upstream", "", dict), "upstream", ns)
        if "downstream" in data:
            cfg.downstream = _parse_state(data["downstream"], "downstream", ns)
        if "initial" in data:
            raise ValidationError("initial", "only valid in homogeneous mode")
    return cfg


def load_config(path, fast: bool = False, nv: int = None) -> ScenarioConfig:
    """Read and validate a scenario file; bundled names are accepted too."""
    path = Path(path)
    if not path.exists() and str(path) in BUNDLED:
        path = CONFIG_DIR / f"{path}.toml"
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ParseError(f"{path}: no such file") from None
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return parse_config(data, fast=fast, nv=nv, source=str(path))


def bundled_config(name: str, fast: bool = False, nv: int = None) -> ScenarioConfig:
    if name not in BUNDLED:
        raise ValueError(f"unknown bundled scenario {name!r}")
    return load_config(CONFIG_DIR / f"{name}.toml", fast=fast, nv=nv)
