"""Discrete macroscopic moments and non-equilibrium temperatures."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import EmptyCell, OutOfBracket
from .grid import PhaseSpace
from .model import GasModel

__all__ = ["K_B", "MomentSet", "compute_moments", "internal_energy", "solve_internal_temperature"]

K_B = 1.380649e-23


@dataclass
class MomentSet:
    """Moments of one or many cells; leading axes of every array follow the input batch.

    Species-resolved fields carry the species axis after the batch axes,
    vector fields a trailing axis of length 3.
    """

    rho_i: np.ndarray
    n_i: np.ndarray
    rho: np.ndarray
    n: np.ndarray
    V: np.ndarray
    V_i: np.ndarray
    V_diff: np.ndarray
    T_i_alpha: np.ndarray
    T_i: np.ndarray
    T_alpha: np.ndarray
    T: np.ndarray
    T_int: np.ndarray
    p: np.ndarray
    tau: np.ndarray
    q: np.ndarray


def internal_energy(T, model: GasModel):
    """Equilibrium specific internal energy ``e_int(T)`` [J/kg]."""
    T = np.asarray(T, dtype=float)
    E, g, m = model.energies, model.degeneracies, model.masses
    x = -np.multiply.outer(1.0 / (K_B * T), E)
    x -= x.max(axis=-1, keepdims=True)
    w = g * np.exp(x)
    return (w * (E / m)).sum(-1) / w.sum(-1)


def _internal_energy_slope(T, model):
    # d e_int / dT = (<E^2/m> - <E><E/m>) / (k T^2) for Boltzmann weights
    E, g, m = model.energies, model.degeneracies, model.masses
    x = -E / (K_B * T)
    w = g * np.exp(x - x.max())
    w /= w.sum()
    return ((w * E * E / m).sum() - (w * E).sum() * (w * E / m).sum()) / (K_B * T * T)


def solve_internal_temperature(rho_i, model: GasModel, bracket=(1.0, 1e6), rtol=1e-12):
    """Internal temperature of one cell from level densities ``rho_i``.

    Solves ``sum_i n_i E_i = rho e_int(T)`` by Brent's method on ``bracket``.
    Returns NaN for gases without internal energy. Raises :class:`OutOfBracket`
    (carrying the nearest bracket end in ``.value``) when the root lies outside.
    """
    rho_i = np.asarray(rho_i, dtype=float)
    if not model.has_internal_energy:
        return float("nan")
    rho = rho_i.sum()
    if not rho > 0:
        raise EmptyCell("non-positive density while solving for the internal temperature")
    target = float((rho_i / model.masses * model.energies).sum() / rho)

    def resid(T):
        return float(internal_energy(T, model)) - target

    lo, hi = bracket
    rlo, rhi = resid(lo), resid(hi)
    if rlo > 0 or rhi < 0:
        exc = OutOfBracket(f"internal energy {target:.6e} J/kg outside e_int([{lo}, {hi}] K)")
        exc.value = lo if rlo > 0 else hi
        raise exc
    if rlo == 0:
        return float(lo)
    T = brentq(resid, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    # one Newton polish step
    s = _internal_energy_slope(T, model)
    if s > 0:
        T2 = T - resid(T) / s
        if lo <= T2 <= hi and abs(resid(T2)) <= abs(resid(T)):
            T = T2
    return float(T)


def compute_moments(f, model: GasModel, phase: PhaseSpace, tint_bracket=(1.0, 1e6),
                    internal_temperature=True) -> MomentSet:
    """Moments of ``f`` with shape ``(..., Ns, N, N, N)``.

    Raises :class:`EmptyCell` when a cell has non-positive total density.
    Cells whose internal temperature falls outside the bracket report the
    bracket end and a warning is issued.
    """
    f = np.asarray(f, dtype=float)
    vg = phase.velocity
    batch = f.shape[:-4]
    ns = model.ns
    m = model.masses
    w = vg.weights * vg.cell_volume
    fw = (f * w).reshape(batch + (ns, -1))
    vx, vy, vz = (np.broadcast_to(c, vg.shape).ravel() for c in vg.mesh)
    vel = np.stack([vx, vy, vz], -1)

    n_i = fw.sum(-1)
    rho_i = n_i * m
    rho = rho_i.sum(-1)
    n = n_i.sum(-1)
    if np.any(~(rho > 0)):
        raise EmptyCell("non-positive mixture density in at least one cell")
    flux_i = fw @ vel
    V = (flux_i * m[:, None]).sum(-2) / rho[..., None]
    with np.errstate(invalid="ignore", divide="ignore"):
        ni_safe = np.where(n_i > 0, n_i, np.nan)
        V_i = flux_i / ni_safe[..., None]
        V_diff = (flux_i - n_i[..., None] * V[..., None, :]) / ni_safe[..., None]

    # second and third central moments about the mixture velocity
    c = vel - V[..., None, :]
    cc = np.einsum("...sk,...ka,...kb->...sab", fw, c, c)
    diag = np.diagonal(cc, axis1=-2, axis2=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        T_i_alpha = m[:, None] * diag / (ni_safe[..., None] * K_B)
    T_i = T_i_alpha.mean(-1)
    T_alpha = (m[:, None] * diag).sum(-2) / (n[..., None] * K_B)
    T = T_alpha.mean(-1)
    p = (m[:, None] * diag).sum((-2, -1)) / 3.0
    tau = (m[:, None, None] * cc).sum(-3) - p[..., None, None] * np.eye(3)
    c2 = (c * c).sum(-1)
    energy = 0.5 * m[:, None] * c2[..., None, :] + model.energies[:, None]
    q = np.einsum("...sk,...sk,...ka->...a", fw, energy, c)

    T_int = np.full(batch, np.nan)
    if internal_temperature and model.has_internal_energy:
        flat_rho = rho_i.reshape(-1, ns)
        out = T_int.reshape(-1)
        n_out = 0
        for idx, r in enumerate(flat_rho):
            try:
                out[idx] = solve_internal_temperature(r, model, tint_bracket)
            except OutOfBracket as exc:
                out[idx] = exc.value
                n_out += 1
        if n_out:
            warnings.warn(f"internal temperature outside bracket in {n_out} cell(s)")
        T_int = out.reshape(batch)
    return MomentSet(rho_i, n_i, rho, n, V, V_i, V_diff, T_i_alpha, T_i, T_alpha, T,
                     T_int, p, tau, q)
