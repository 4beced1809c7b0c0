"""Spectral evaluation of the elastic and inelastic collision operators.

The operator of every species is obtained in four steps: forward transforms
of all species, weighted convolutions in Fourier space, inverse transforms,
and two constrained least-squares projections that restore the discrete
collision invariants (one for the elastic operators, one for the inelastic).

Convolutions sharing the same product ``fhat_k(zeta_e - zeta_kappa) fhat_l(zeta_kappa)``
are fused: per pair ``(k, l)`` the elastic gain and loss of that pair, the
grouped inelastic gains ``sum_j G_gain(i, j -> k, l)`` for every ``i`` and the
grouped inelastic loss of ``(k, l)`` are accumulated in one sweep.

Index clipping
--------------
``"box"`` follows the clipped box literally: the second argument ranges over
``kappa_s >= 0``. ``"symmetric"`` (default) also drops the ``kappa_s = 0``
Nyquist planes and zeroes outputs on the ``e_s = 0`` planes. The truncation is
then invariant under ``zeta -> -zeta``, the transformed operator is Hermitian,
only half of the nodes need computing and the inverse transform is real.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ._kernels import weighted_convolution
from .errors import SingularGram
from .grid import PhaseSpace
from .model import CollisionCatalog, GasModel, build_collision_catalog
from .spectral import forward_transform, inverse_transform
from .weights import WeightTables

__all__ = [
    "IntegrationMatrices", "build_integration_matrices", "project_elastic",
    "project_inelastic", "project_species", "convolve_elastic", "convolve_inelastic",
    "CollisionOperator", "evaluate_operators", "ImaginaryResidue",
]


class ImaginaryResidue(UserWarning):
    """Inverse transform of an operator left a non-negligible imaginary part."""


# ---------------------------------------------------------------------------
# integration matrices and projections


@dataclass
class IntegrationMatrices:
    """Collision invariants at the velocity nodes times ``w_k dv^3``.

    ``c_el[i]`` has ``Ns + 4`` rows (species indicators times ``m_i``, momentum,
    kinetic energy); ``c_in[i]`` has 5 rows (mass, momentum, kinetic plus
    internal energy). The projections use row-scaled copies, which leaves the
    projector unchanged but keeps the Gram matrices well conditioned.
    """

    c_el: np.ndarray
    c_in: np.ndarray
    scale_el: np.ndarray
    scale_in: np.ndarray
    n_el: int
    n_in: int
    chol_el: tuple
    chol_in: tuple

    @property
    def gram_el(self):
        """``Csum_el = Ns sum_i C_el,i C_el,i^T`` (physical units)."""
        return self.n_el * np.einsum("iam,ibm->ab", self.c_el, self.c_el)

    @property
    def gram_in(self):
        return self.n_in * np.einsum("iam,ibm->ab", self.c_in, self.c_in)

    def _scaled(self, kind):
        if kind == "el":
            return self.c_el / self.scale_el[None, :, None], self.chol_el
        return self.c_in / self.scale_in[None, :, None], self.chol_in


def build_integration_matrices(phase: PhaseSpace, model: GasModel) -> IntegrationMatrices:
    vg = phase.velocity
    ns = model.ns
    m = model.masses
    w = (vg.weights * vg.cell_volume).ravel()
    vx, vy, vz = (np.broadcast_to(c, vg.shape).ravel() for c in vg.mesh)
    v2 = vg.speed_squared.ravel()
    c_el = np.zeros((ns, ns + 4, w.size))
    c_in = np.zeros((ns, 5, w.size))
    for i in range(ns):
        c_el[i, i] = m[i] * w
        c_el[i, ns:ns + 3] = m[i] * np.stack([vx, vy, vz]) * w
        c_el[i, ns + 3] = 0.5 * m[i] * v2 * w
        c_in[i, 0] = m[i] * w
        c_in[i, 1:4] = c_el[i, ns:ns + 3]
        c_in[i, 4] = (0.5 * m[i] * v2 + model.energies[i]) * w
    mref = float(m.mean()) * float(w[0])
    scale_el = np.r_[np.full(ns, mref), np.full(3, mref * vg.lv), mref * vg.lv**2]
    scale_in = np.r_[mref, np.full(3, mref * vg.lv), mref * vg.lv**2]

    def factor(c, scale):
        cs = c / scale[None, :, None]
        g = np.einsum("iam,ibm->ab", cs, cs)
        try:
            return cho_factor(g, lower=True)
        except LinAlgError as exc:
            raise SingularGram(f"Gram matrix is not positive definite: {exc}") from None

    n_el = ns
    n_in = ns**3 - ns
    return IntegrationMatrices(c_el, c_in, scale_el, scale_in, n_el, n_in,
                               factor(c_el, scale_el), factor(c_in, scale_in))


def project_species(q, mats: IntegrationMatrices, kind: str = "el"):
    """Project species-summed operators ``q[..., i, m]`` onto the constraint set.

    With ``Q_i = sum_j Q_ij`` (resp. the sum over the inelastic channels of
    ``i``) the per-channel projection sums to
    ``Q_i - C_i^T (sum_i C_i C_i^T)^{-1} sum_i C_i Q_i``, which is applied here.
    """
    q = np.asarray(q, dtype=float)
    cs, chol = mats._scaled(kind)
    r = np.einsum("iam,...im->...a", cs, q)
    lam = cho_solve(chol, r.reshape(-1, r.shape[-1]).T).T.reshape(r.shape)
    return q - np.einsum("iam,...a->...im", cs, lam)


def project_elastic(q_pairs, mats: IntegrationMatrices):
    """Per-pair elastic projection; ``q_pairs[i, j]`` holds the unprojected ``Q_ij``."""
    q_pairs = np.asarray(q_pairs, dtype=float)
    cs, chol = mats._scaled("el")
    ns = q_pairs.shape[0]
    r = np.einsum("iam,ijm->a", cs, q_pairs)
    lam = cho_solve(chol, r) / mats.n_el
    corr = np.einsum("iam,a->im", cs, lam)
    return q_pairs - corr[:, None, :] * np.ones((1, ns, 1))


def project_inelastic(q_channels, catalog: CollisionCatalog, mats: IntegrationMatrices):
    """Per-channel inelastic projection; rows follow ``catalog.inelastic``."""
    q_channels = np.asarray(q_channels, dtype=float)
    cs, chol = mats._scaled("in")
    sp = np.array([c.i for c in catalog.inelastic])
    r = np.einsum("cam,cm->a", cs[sp], q_channels)
    lam = cho_solve(chol, r) / mats.n_in
    return q_channels - np.einsum("cam,a->cm", cs[sp], lam)


# ---------------------------------------------------------------------------
# reference convolutions (one node at a time, dense tables)


def _box(e, n, kmin):
    h = n // 2
    return [np.arange(max(kmin, es - h + 1), min(n - 1, es + h - 1) + 1) for es in e]


def _weighted_sum(fa, fb, weight_row, e, n, kmin):
    h = n // 2
    bx, by, bz = _box(e, n, kmin)
    KX, KY, KZ = np.meshgrid(bx, by, bz, indexing="ij")
    A = fa[e[0] - KX + h, e[1] - KY + h, e[2] - KZ + h]
    B = fb[KX, KY, KZ]
    W = weight_row.reshape(n, n, n)[KX, KY, KZ]
    return np.sum(A * B * W)


def convolve_elastic(fhat_i, fhat_j, table, e, phase: PhaseSpace, kmin: int = 0) -> complex:
    """Transformed elastic operator of pair ``(i, j)`` at Fourier node ``e``.

    ``table`` is the dense ``(N^3, N^3)`` elastic weight table. Unit Fourier
    weights are assumed.
    """
    n = phase.nv
    flat = np.ravel_multi_index(tuple(e), (n,) * 3)
    dz3 = phase.fourier.cell_volume
    return _weighted_sum(fhat_i, fhat_j, table[flat], e, n, kmin) * dz3


def convolve_inelastic(fhat_k, fhat_l, fhat_i, fhat_j, gain_table, loss_table, e,
                       phase: PhaseSpace, kmin: int = 0) -> complex:
    """Transformed inelastic operator of channel ``(i, j -> k, l)`` at node ``e``.

    ``gain_table`` is dense ``(N^3, N^3)``; ``loss_table`` is ``(N^3,)`` in ``kappa``.
    """
    n = phase.nv
    flat = np.ravel_multi_index(tuple(e), (n,) * 3)
    dz3 = phase.fourier.cell_volume
    gain = _weighted_sum(fhat_k, fhat_l, gain_table[flat], e, n, kmin)
    loss = _weighted_sum(fhat_i, fhat_j, loss_table, e, n, kmin)
    return (gain - loss) * dz3


# ---------------------------------------------------------------------------
# fused evaluation


def _mirror(n):
    """Flat index of the node at ``N - e`` for interior nodes, -1 on edge planes."""
    idx = np.arange(n)
    mir = np.where(idx == 0, -1, n - idx)
    mx, my, mz = np.meshgrid(mir, mir, mir, indexing="ij")
    bad = (mx < 0) | (my < 0) | (mz < 0)
    flat = (np.where(bad, 0, mx) * n + np.where(bad, 0, my)) * n + np.where(bad, 0, mz)
    return np.where(bad, -1, flat).ravel()


@dataclass
class _Plan:
    gvals: np.ndarray
    lvals: np.ndarray
    pair_k: np.ndarray
    pair_l: np.ndarray
    term_ptr: np.ndarray
    term_slot: np.ndarray
    term_g: np.ndarray
    term_l: np.ndarray
    n_slots: int


def _build_plan(tables: WeightTables, model: GasModel) -> _Plan:
    ns = model.ns
    g_rows, l_rows = [], []
    pk, pl, ptr, slot, tg, tl = [], [], [0], [], [], []
    inel = model.inelastic
    for k in range(ns):
        for l in range(ns):
            pk.append(k)
            pl.append(l)
            c = (k, l, k, l)
            g_rows.append(tables.gain[c])
            l_rows.append(tables.loss[c])
            slot.append(k)
            tg.append(len(g_rows) - 1)
            tl.append(len(l_rows) - 1)
            if inel:
                lsum = sum(tables.loss[(k, l, m, q)] for m in range(ns) for q in range(ns)
                           if (m, q) != (k, l))
                for i in range(ns):
                    gs = [tables.gain[(i, j, k, l)] for j in range(ns) if (i, j) != (k, l)]
                    g_rows.append(np.sum(gs, axis=0))
                    slot.append(ns + i)
                    tg.append(len(g_rows) - 1)
                    if i == k:
                        l_rows.append(lsum)
                        tl.append(len(l_rows) - 1)
                    else:
                        tl.append(-1)
            ptr.append(len(slot))
    i64 = lambda x: np.asarray(x, dtype=np.int64)
    return _Plan(np.ascontiguousarray(g_rows), np.ascontiguousarray(l_rows), i64(pk), i64(pl),
                 i64(ptr), i64(slot), i64(tg), i64(tl), 2 * ns if inel else ns)


class CollisionOperator:
    """Projected collision operators ``Q_i`` for batches of distributions.

    Parameters
    ----------
    phase : PhaseSpace
    model : GasModel
    tables : WeightTables
    clipping : {"symmetric", "box"}
    batch : int
        Spatial cells evaluated per kernel call.
    imag_tol : float
        Threshold on ``max|Im| / max|Re|`` after the inverse transform above
        which an :class:`ImaginaryResidue` warning is issued.
    """

    def __init__(self, phase: PhaseSpace, model: GasModel, tables: WeightTables,
                 clipping: str = "symmetric", batch: int = 32, imag_tol: float = 1e-10):
        if clipping not in ("symmetric", "box"):
            raise ValueError(f"unknown clipping {clipping!r}")
        self.phase = phase
        self.model = model
        self.tables = tables
        self.catalog = build_collision_catalog(model)
        self.matrices = build_integration_matrices(phase, model)
        self.clipping = clipping
        self.batch = int(batch)
        self.imag_tol = imag_tol
        self.plan = _build_plan(tables, model)
        self.last_imag_ratio = 0.0
        n = phase.nv
        self._keys = tables.keymap.keys
        self._kn2 = tables.keymap.kappa_n2.astype(np.int64)
        if clipping == "symmetric":
            mir = _mirror(n)
            flat = np.arange(n**3)
            interior = mir >= 0
            self._eps = flat[interior & (flat <= mir)].astype(np.int64)
            self._partner = mir
            self._edge = ~interior
            self._kmin = 1
        else:
            self._eps = np.arange(n**3, dtype=np.int64)
            self._kmin = 0

    @property
    def n_channels(self) -> int:
        """Number of partial operators represented (elastic plus inelastic)."""
        c = self.catalog
        return len(c.elastic) + (len(c.inelastic) if self.model.inelastic else 0)

    def transformed(self, f):
        """Unprojected transformed operators, shape ``(C, n_slots, N, N, N)``.

        A single state ``(Ns, N, N, N)`` is treated as a batch of one.
        """
        f = np.asarray(f, dtype=float)
        if f.ndim == 4:
            f = f[None]
        n = self.phase.nv
        ns = self.model.ns
        C = f.shape[0]
        fhat = forward_transform(f, self.phase).reshape(C, ns, n**3)
        fr = np.ascontiguousarray(fhat.real.transpose(1, 2, 0))
        fi = np.ascontiguousarray(fhat.imag.transpose(1, 2, 0))
        p = self.plan
        out_r, out_i = weighted_convolution(
            fr, fi, self._keys, self._kn2, p.gvals, p.lvals, p.pair_k, p.pair_l, p.term_ptr,
            p.term_slot, p.term_g, p.term_l, self._eps, self._kmin, n, p.n_slots)
        out = (out_r + 1j * out_i) * self.phase.fourier.cell_volume
        if self.clipping == "symmetric":
            src = self._eps
            dst = self._partner[src]
            out[:, dst] = np.conj(out[:, src])
            self_pair = src == dst
            out[:, src[self_pair]] = out[:, src[self_pair]].real
            out[:, self._edge] = 0.0
        return out.transpose(2, 0, 1).reshape(C, p.n_slots, n, n, n)

    def unprojected(self, f):
        """Velocity-space operators before projection, shape ``(C, n_slots, N, N, N)``."""
        q = inverse_transform(self.transformed(f), self.phase)
        re = np.abs(q.real).max(initial=0.0)
        im = np.abs(q.imag).max(initial=0.0)
        ratio = im / re if re > 0 else 0.0
        self.last_imag_ratio = max(self.last_imag_ratio, ratio)
        if ratio > self.imag_tol:
            warnings.warn(f"imaginary residue {ratio:.2e} of max|Re| after inverse transform",
                          ImaginaryResidue, stacklevel=2)
        return q.real

    def evaluate(self, f):
        """Projected ``Q_i`` for ``f`` of shape ``(Ns, N, N, N)`` or ``(C, Ns, N, N, N)``."""
        f = np.asarray(f, dtype=float)
        single = f.ndim == 4
        if single:
            f = f[None]
        C, ns = f.shape[:2]
        n = self.phase.nv
        out = np.empty_like(f)
        for c0 in range(0, C, self.batch):
            q = self.unprojected(f[c0:c0 + self.batch]).reshape(-1, self.plan.n_slots, n**3)
            res = project_species(q[:, :ns], self.matrices, "el")
            if self.model.inelastic:
                res = res + project_species(q[:, ns:], self.matrices, "in")
            out[c0:c0 + self.batch] = res.reshape(-1, ns, n, n, n)
        return out[0] if single else out

    __call__ = evaluate


def evaluate_operators(state, tables: WeightTables, model: GasModel, **kwargs):
    """Convenience wrapper: projected operators of ``state`` with a fresh operator."""
    return CollisionOperator(tables.phase, model, tables, **kwargs).evaluate(state)
