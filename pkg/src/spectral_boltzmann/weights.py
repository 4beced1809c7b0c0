"""Convolution weights for isotropic cross sections.

For isotropic scattering the weights reduce to one-dimensional integrals in
the relative speed,

    G_el(zeta, xi)  = c int_0^umax  s(u) [j0(a zeta u) j0(|xi - a zeta| u) - j0(xi u)] u^3 du
    G_gain(zeta,xi) = c int_{u*g}^umax s_rev(u') j0(a zeta sqrt(u'^2 + 2dE/mu)) j0(|xi - a zeta| u') u'^3 du'
    L_loss(xi)      = c int_{u*l}^umax s(u) j0(xi u) u^3 du

with ``c = 4 sqrt(2 pi)``, ``a = mu_ij / m_i`` and ``j0(x) = sin(x)/x``.

The weights depend on the Fourier nodes only through a few scalar
invariants, so tables are stored deduplicated. For a node pair with integer
offsets ``m`` (zeta) and ``n`` (xi) from the grid centre, ``|zeta|^2`` and
``|xi - a zeta|^2`` are functions of ``(|m|^2, |n|^2, n.m)``; for equal masses
(``a = 1/2``) the smaller set ``(|m|^2, |2n - m|^2)`` suffices. A :class:`KeyMap`
assigns every ``(e, kappa)`` pair an integer key into per-channel value arrays.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._kernels import keyed_quadrature
from .errors import CacheMismatch, QuadratureFailure
from .grid import PhaseSpace
from .model import Channel, CollisionCatalog, GasModel, build_collision_catalog

__all__ = [
    "UStarThresholds", "u_star", "u_max", "QuadratureRule", "KeyMap", "build_key_map",
    "weight_elastic", "weight_inelastic_gain", "weight_inelastic_loss",
    "WeightTables", "precompute_tables", "save_tables", "load_tables",
]

PREFACTOR = 4.0 * math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class UStarThresholds:
    gain: float
    loss: float


def u_star(channel: Channel) -> UStarThresholds:
    """Lower integration limits of the gain and loss integrals."""
    de, mu = channel.delta_e, channel.reduced_mass
    gain = math.sqrt(-2.0 * de / mu) if de < 0 else 0.0
    loss = math.sqrt(2.0 * de / mu) if de > 0 else 0.0
    return UStarThresholds(gain, loss)


#: truncation factors for the relative speed, in units of Lv
DEALIASED = 4.0 / (3.0 + math.sqrt(2.0))
CUBE_DIAGONAL = 2.0 * math.sqrt(3.0)


def u_max(phase_or_lv, factor: float = DEALIASED) -> float:
    """Upper limit of the relative-speed integrals.

    Sampling a weight on the Fourier grid periodises the collision kernel in
    velocity with period ``2 Lv``. With the default factor ``4/(3 + sqrt 2)``
    a distribution supported in the ball of radius ``2 Lv/(3 + sqrt 2)`` sees no
    aliased kernel copies. ``CUBE_DIAGONAL`` (every in-cube relative speed)
    is available but lets wrapped copies dominate the operator.
    """
    lv = phase_or_lv.lv if hasattr(phase_or_lv, "lv") else float(phase_or_lv)
    return factor * lv


def _j0(x):
    return np.sinc(np.asarray(x) / np.pi)


@dataclass(frozen=True)
class QuadratureRule:
    """Composite Gauss-Legendre rule for oscillatory radial integrals.

    The interval is split at the supplied break points (cross-section kinks and
    thresholds) and each piece is cut into panels short enough that the
    integrand phase advances by at most ``order * phase_per_node`` radians per
    panel. ``rtol`` is the accepted relative change when the panel count is
    doubled; up to ``max_refine`` doublings are tried before giving up.
    """

    order: int = 64
    phase_per_node: float = 1.0
    rtol: float = 1e-10
    max_refine: int = 4

    def nodes(self, lo, hi, breaks=(), omega=0.0, refine=0):
        x0, w0 = np.polynomial.legendre.leggauss(self.order)
        pts = sorted({float(lo), float(hi), *(float(b) for b in breaks if lo < b < hi)})
        xs, ws = [], []
        for a, b in zip(pts[:-1], pts[1:]):
            if b <= a:
                continue
            npan = max(1, math.ceil(omega * (b - a) / (self.order * self.phase_per_node)))
            npan *= 2**refine
            edges = np.linspace(a, b, npan + 1)
            half = 0.5 * np.diff(edges)
            mid = 0.5 * (edges[1:] + edges[:-1])
            xs.append((mid[:, None] + half[:, None] * x0[None, :]).ravel())
            ws.append((half[:, None] * w0[None, :]).ravel())
        if not xs:
            return np.zeros(0), np.zeros(0)
        return np.concatenate(xs), np.concatenate(ws)


# ---------------------------------------------------------------------------
# magnitude-level integrals


def _radial_gain(Z, Q, sigma, lo, hi, shift, breaks, rule, refine=0):
    """``c int_lo^hi sigma(u) j0(Z sqrt(u^2+shift)) j0(Q u) u^3 du`` for arrays Z, Q."""
    Z = np.asarray(Z, dtype=float)
    Q = np.asarray(Q, dtype=float)
    omega = float(np.max(Z, initial=0.0) + np.max(Q, initial=0.0))
    u, w = rule.nodes(lo, hi, breaks, omega, refine)
    if u.size == 0:
        return np.zeros(np.broadcast(Z, Q).shape)
    s = np.sqrt(np.maximum(u * u + shift, 0.0))
    base = PREFACTOR * w * sigma(u) * u**3
    return np.sum(base * _j0(Z[..., None] * s) * _j0(Q[..., None] * u), axis=-1)


def _radial_loss(X, sigma, lo, hi, breaks, rule, refine=0):
    X = np.asarray(X, dtype=float)
    u, w = rule.nodes(lo, hi, breaks, float(np.max(X, initial=0.0)), refine)
    if u.size == 0:
        return np.zeros(X.shape)
    base = PREFACTOR * w * sigma(u) * u**3
    return np.sum(base * _j0(X[..., None] * u), axis=-1)


def _pair_ratio(model: GasModel, i, j) -> float:
    return model.reduced_mass(i, j) / model.species[i].mass


def _sigma_fn(model, i, j, k, l):
    xs = model.cross_section
    return lambda u: xs.sigma(i, j, k, l, u)


def _gain_setup(model, ch: Channel, umax):
    """Integration data for the gain weight of channel ``ch``."""
    us = u_star(ch)
    shift = 2.0 * ch.delta_e / ch.reduced_mass
    sig = _sigma_fn(model, ch.k, ch.l, ch.i, ch.j)
    breaks = tuple(model.cross_section.kinks(ch.k, ch.l)) + (us.gain,)
    return sig, us.gain, shift, breaks


def _loss_setup(model, ch: Channel, umax):
    us = u_star(ch)
    sig = _sigma_fn(model, ch.i, ch.j, ch.k, ch.l)
    breaks = tuple(model.cross_section.kinks(ch.i, ch.j)) + (us.loss,)
    return sig, us.loss, breaks


def _magnitudes(zeta, xi, a):
    zeta = np.asarray(zeta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return (np.linalg.norm(zeta, axis=-1), np.linalg.norm(xi, axis=-1),
            np.linalg.norm(xi - a * zeta, axis=-1))


def weight_elastic(zeta, xi, i, j, model: GasModel, umax: float,
                   rule: QuadratureRule = QuadratureRule()):
    """Elastic weight ``G_el(zeta, xi)`` of pair ``(i, j)``; vectors in the last axis."""
    a = _pair_ratio(model, i, j)
    z, x, q = _magnitudes(zeta, xi, a)
    sig = _sigma_fn(model, i, j, i, j)
    breaks = model.cross_section.kinks(i, j)
    gain = _radial_gain(a * z, q, sig, 0.0, umax, 0.0, breaks, rule)
    loss = _radial_loss(x, sig, 0.0, umax, breaks, rule)
    return gain - loss


def weight_inelastic_gain(zeta, xi, channel: Channel, model: GasModel, umax: float,
                          rule: QuadratureRule = QuadratureRule()):
    a = _pair_ratio(model, channel.i, channel.j)
    z, _, q = _magnitudes(zeta, xi, a)
    sig, lo, shift, breaks = _gain_setup(model, channel, umax)
    return _radial_gain(a * z, q, sig, lo, umax, shift, breaks, rule)


def weight_inelastic_loss(xi, channel: Channel, model: GasModel, umax: float,
                          rule: QuadratureRule = QuadratureRule()):
    x = np.linalg.norm(np.asarray(xi, dtype=float), axis=-1)
    sig, lo, breaks = _loss_setup(model, channel, umax)
    return _radial_loss(x, sig, lo, umax, breaks, rule)


# ---------------------------------------------------------------------------
# key map


@dataclass
class KeyMap:
    """Deduplication of Fourier node pairs.

    Attributes
    ----------
    kind : {"half", "triple"}
    n : int
        Nodes per axis.
    keys : ndarray of int32, shape (n^3, n^3)
        ``keys[e, kappa]`` indexes the invariant tuples below.
    m2 : ndarray
        ``|m|^2`` per key.
    q2 : ndarray
        ``|2n - m|^2`` per key (``half``), unused for ``triple``.
    n2, nm : ndarray
        ``|n|^2`` and ``n.m`` per key (``triple`` only).
    kappa_n2 : ndarray, shape (n^3,)
        ``|n|^2`` of every Fourier node, the loss-table index.
    """

    kind: str
    n: int
    keys: np.ndarray
    m2: np.ndarray
    q2: np.ndarray = None
    n2: np.ndarray = None
    nm: np.ndarray = None
    kappa_n2: np.ndarray = None

    @property
    def n_keys(self) -> int:
        return self.m2.shape[0]

    def zeta_sq(self):
        """``|m|^2`` per key (units of dzeta^2)."""
        return self.m2.astype(float)

    def shifted_sq(self, a):
        """``|n - a m|^2`` per key (units of dzeta^2)."""
        if self.kind == "half":
            if abs(a - 0.5) > 1e-12:
                raise ValueError("half key map only supports mass ratio 1/2")
            return self.q2 / 4.0
        return np.maximum(self.n2 - 2.0 * a * self.nm + a * a * self.m2, 0.0)


def _offsets(n):
    r = np.arange(n) - n // 2
    return np.stack(np.meshgrid(r, r, r, indexing="ij"), -1).reshape(-1, 3).astype(np.int64)


def build_key_map(n: int, kind: str = "triple") -> KeyMap:
    m = _offsets(n)
    m2 = (m * m).sum(1)
    h = n // 2
    if kind == "half":
        kq = 3 * (3 * h) ** 2 + 1

        def row(e):
            d = 2 * m - m[e]
            return m2[e] * kq + (d * d).sum(1)
    elif kind == "triple":
        k1 = 3 * h * h + 1
        k2 = 2 * k1 + 1

        def row(e):
            return (m2[e] * k1 + m2) * k2 + (m @ m[e] + k1)
    else:
        raise ValueError(f"unknown key kind {kind!r}")
    nn = n**3
    uniq = np.unique(np.concatenate([np.unique(row(e)) for e in range(nn)]))
    keys = np.empty((nn, nn), dtype=np.int32)
    for e in range(nn):
        keys[e] = np.searchsorted(uniq, row(e))
    km = KeyMap(kind, n, keys, m2=None, kappa_n2=m2.copy())
    if kind == "half":
        km.m2, km.q2 = np.divmod(uniq, kq)
    else:
        hi, nmo = np.divmod(uniq, k2)
        km.m2, km.n2 = np.divmod(hi, k1)
        km.nm = nmo - k1
    return km


# ---------------------------------------------------------------------------
# tables


@dataclass
class WeightTables:
    """Deduplicated weight tables for every catalog channel.

    ``gain[ch]`` holds values per key; ``loss[ch]`` holds values per integer
    ``|n|^2``. Elastic channels carry both (``G_el = gain - loss``).
    Dense tables are produced on demand by :meth:`dense_elastic`,
    :meth:`dense_gain` and :meth:`dense_loss`.
    """

    phase: PhaseSpace
    model_hash: str
    order: int
    keymap: KeyMap
    catalog: CollisionCatalog
    umax: float = 0.0
    gain: dict = field(default_factory=dict)
    loss: dict = field(default_factory=dict)
    ratio: dict = field(default_factory=dict)

    @property
    def grid_hash(self):
        return self.phase.fingerprint()

    def channels(self):
        return list(self.gain.keys())

    def dense_gain(self, ch: Channel) -> np.ndarray:
        return self.gain[_ckey(ch)][self.keymap.keys]

    def dense_loss(self, ch: Channel) -> np.ndarray:
        return self.loss[_ckey(ch)][self.keymap.kappa_n2]

    def dense_elastic(self, i, j) -> np.ndarray:
        c = (i, j, i, j)
        return self.gain[c][self.keymap.keys] - self.loss[c][self.keymap.kappa_n2][None, :]


def _ckey(ch):
    return ch if isinstance(ch, tuple) else (ch.i, ch.j, ch.k, ch.l)


def _table_values(km: KeyMap, a, dz, sigma, lo, hi, shift, breaks, rule, refine):
    """Gain-type integral for every key of ``km`` at mass ratio ``a``."""
    zsq, zinv = np.unique(km.zeta_sq(), return_inverse=True)
    Z = a * dz * np.sqrt(zsq)
    qsq = km.shifted_sq(a)
    Qall = dz * np.sqrt(qsq)
    omega = float(Z.max() + Qall.max())
    u, w = rule.nodes(lo, hi, breaks, omega, refine)
    if u.size == 0:
        return np.zeros(km.n_keys)
    s = np.sqrt(np.maximum(u * u + shift, 0.0))
    base = PREFACTOR * w * sigma(u) * u**3
    zfac = base[None, :] * _j0(Z[:, None] * s[None, :])
    quniq, qinv = np.unique(qsq, return_inverse=True)
    if Z.size * quniq.size <= 4 * km.n_keys:
        B = _j0(dz * np.sqrt(quniq)[:, None] * u[None, :])
        M = zfac @ B.T
        return M[zinv, qinv]
    return keyed_quadrature(zinv.astype(np.int64), Qall, np.ascontiguousarray(zfac), u)


def _loss_values(n2max, dz, sigma, lo, hi, breaks, rule, refine):
    X = dz * np.sqrt(np.arange(n2max + 1, dtype=float))
    return _radial_loss(X, sigma, lo, hi, breaks, rule, refine)


def _checked(compute, label):
    """Evaluate with refinement until two successive panel counts agree."""
    rule_refine = 0
    prev = compute(0)
    scale = max(float(np.max(np.abs(prev), initial=0.0)), 1e-300)
    for rule_refine in range(1, _checked.max_refine + 1):
        cur = compute(rule_refine)
        err = float(np.max(np.abs(cur - prev), initial=0.0))
        if err <= _checked.rtol * scale:
            return prev if rule_refine == 1 else cur
        prev = cur
    raise QuadratureFailure(f"{label}: relative change {err / scale:.2e} after "
                            f"{_checked.max_refine} panel doublings")


def precompute_tables(phase: PhaseSpace, catalog: CollisionCatalog, model: GasModel,
                      rule: QuadratureRule = QuadratureRule(), keymap: KeyMap = None,
                      verify: str = "sample", progress=None,
                      umax_factor: float = DEALIASED) -> WeightTables:
    """Fill weight tables for every channel that the cross-section model activates.

    Parameters
    ----------
    verify : {"sample", "full", "none"}
        Convergence check by panel doubling: on a subsample of keys, on all
        keys, or skipped.
    umax_factor : float
        Relative-speed truncation in units of ``Lv``, see :func:`u_max`.
    """
    n = phase.nv
    if keymap is None:
        equal = np.allclose(model.masses, model.masses[0], rtol=0, atol=0)
        keymap = build_key_map(n, "half" if equal else "triple")
    dz = phase.fourier.dzeta
    um = u_max(phase, umax_factor)
    n2max = int(keymap.kappa_n2.max())
    tables = WeightTables(phase, model.fingerprint(), rule.order, keymap, catalog, um)
    if verify == "sample" and keymap.n_keys > 4096:
        rng = np.random.default_rng(12345)
        idx = np.unique(np.concatenate([
            rng.choice(keymap.n_keys, 2048, replace=False),
            np.argsort(keymap.shifted_sq(0.5) if keymap.kind == "half" else keymap.n2)[-64:],
            np.argsort(keymap.m2)[-64:]]))
        sub = KeyMap(keymap.kind, n, None, keymap.m2[idx],
                     None if keymap.q2 is None else keymap.q2[idx],
                     None if keymap.n2 is None else keymap.n2[idx],
                     None if keymap.nm is None else keymap.nm[idx])
    else:
        sub = keymap

    channels = list(catalog.elastic)
    if model.inelastic:
        channels += list(catalog.inelastic)
    for count, ch in enumerate(channels):
        a = _pair_ratio(model, ch.i, ch.j)
        if ch.elastic:
            sig = _sigma_fn(model, ch.i, ch.j, ch.i, ch.j)
            gl, gshift, gbreaks = 0.0, 0.0, tuple(model.cross_section.kinks(ch.i, ch.j))
            lsig, llo, lbreaks = sig, 0.0, gbreaks
        else:
            sig, gl, gshift, gbreaks = _gain_setup(model, ch, um)
            lsig, llo, lbreaks = _loss_setup(model, ch, um)
        label = f"channel {ch.i + 1},{ch.j + 1}->{ch.k + 1},{ch.l + 1}"

        if verify != "none":
            _checked(lambda r: _table_values(sub, a, dz, sig, gl, um, gshift, gbreaks, rule, r),
                     label + " gain")
            _checked(lambda r: _loss_values(n2max, dz, lsig, llo, um, lbreaks, rule, r),
                     label + " loss")
        key = (ch.i, ch.j, ch.k, ch.l)
        tables.gain[key] = _table_values(keymap, a, dz, sig, gl, um, gshift, gbreaks, rule, 0)
        tables.loss[key] = _loss_values(n2max, dz, lsig, llo, um, lbreaks, rule, 0)
        tables.ratio[key] = a
        bad = ~np.isfinite(tables.gain[key])
        if bad.any() or not np.all(np.isfinite(tables.loss[key])):
            raise QuadratureFailure(f"{label}: non-finite weight")
        if progress is not None:
            progress(count + 1, len(channels))
    return tables


_checked.rtol = 1e-10
_checked.max_refine = 2


# ---------------------------------------------------------------------------
# binary cache

_MAGIC = b"SBWT"
_VERSION = 1
_HEADER = struct.Struct("<4sI16s16sIIIIddB7x")
_RECORD = struct.Struct("<iiiiQQd")


def save_tables(tables: WeightTables, path):
    """Write tables in the little-endian cache format described in the README."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    km = tables.keymap
    keys = list(tables.gain.keys())
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, tables.grid_hash.encode(),
                              tables.model_hash.encode(), tables.order, len(keys),
                              tables.phase.nv, km.n_keys, tables.phase.lv, tables.umax,
                              0 if km.kind == "half" else 1))
        for key in keys:
            g = np.asarray(tables.gain[key], dtype="<f8")
            lo = np.asarray(tables.loss[key], dtype="<f8")
            fh.write(_RECORD.pack(*key, g.size, lo.size, tables.ratio[key]))
            fh.write(g.tobytes())
            fh.write(lo.tobytes())


def load_tables(path, phase: PhaseSpace, model: GasModel, order: int,
                umax_factor: float = DEALIASED, keymap: KeyMap = None) -> WeightTables:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise CacheMismatch(f"{path}: truncated header")
        magic, version, ghash, mhash, qorder, nch, nv, nkeys, lv, um, kind = _HEADER.unpack(head)
        if magic != _MAGIC or version != _VERSION:
            raise CacheMismatch(f"{path}: not a weight cache (magic/version)")
        if ghash.decode() != phase.fingerprint() or mhash.decode() != model.fingerprint() \
                or qorder != order or not math.isclose(um, u_max(phase, umax_factor)):
            raise CacheMismatch(f"{path}: cache was built for a different grid/model/quadrature")
        kind = "half" if kind == 0 else "triple"
        if keymap is None or keymap.kind != kind:
            keymap = build_key_map(nv, kind)
        if keymap.n_keys != nkeys:
            raise CacheMismatch(f"{path}: key count mismatch")
        tables = WeightTables(phase, mhash.decode(), order, keymap,
                              build_collision_catalog(model), um)
        for _ in range(nch):
            i, j, k, l, ng, nl, ratio = _RECORD.unpack(fh.read(_RECORD.size))
            g = np.frombuffer(fh.read(8 * ng), dtype="<f8").astype(float)
            lo = np.frombuffer(fh.read(8 * nl), dtype="<f8").astype(float)
            tables.gain[(i, j, k, l)] = g
            tables.loss[(i, j, k, l)] = lo
            tables.ratio[(i, j, k, l)] = ratio
    return tables


def cache_path(cache_dir, phase, model, rule=QuadratureRule(), umax_factor=DEALIASED) -> Path:
    tag = f"{phase.fingerprint()}_{model.fingerprint()}_{rule.order}_{umax_factor:.6f}"
    return Path(cache_dir) / f"weights_{tag}.bin"


def cached_tables(phase, catalog, model, rule=QuadratureRule(), cache_dir=None,
                  progress=None, umax_factor=DEALIASED) -> WeightTables:
    """Load tables from ``cache_dir`` when present, otherwise compute and store."""
    if cache_dir is None:
        return precompute_tables(phase, catalog, model, rule, progress=progress,
                                 umax_factor=umax_factor)
    path = cache_path(cache_dir, phase, model, rule, umax_factor)
    if path.exists():
        try:
            return load_tables(path, phase, model, rule.order, umax_factor)
        except CacheMismatch as exc:
            warnings.warn(f"ignoring weight cache: {exc}")
    tables = precompute_tables(phase, catalog, model, rule, progress=progress,
                               umax_factor=umax_factor)
    save_tables(tables, path)
    return tables
