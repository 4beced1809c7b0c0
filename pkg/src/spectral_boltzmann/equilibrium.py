"""Equilibrium states: Maxwellians, Boltzmann populations and shock jumps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import NoConvergence, OutOfBracket
from .grid import PhaseSpace
from .model import GasModel
from .moments import K_B, internal_energy

__all__ = [
    "EquilibriumState", "maxwellian_on_grid", "equilibrium_field", "boltzmann_populations",
    "partition_function", "translational_energy", "solve_equilibrium_temperature",
    "post_shock_state", "mach_number",
]


@dataclass(frozen=True)
class EquilibriumState:
    """Uniform state of a mixture: level densities, temperature and x-velocity."""

    rho_i: tuple
    T: float
    V: float = 0.0

    @property
    def rho(self) -> float:
        return float(np.sum(self.rho_i))


def maxwellian_on_grid(rho_i, T, V, masses, phase: PhaseSpace) -> np.ndarray:
    """Maxwellians of every species on the velocity grid, shape ``(Ns, N, N, N)``.

    ``V`` is a scalar x-velocity or a 3-vector.
    """
    vg = phase.velocity
    rho_i = np.atleast_1d(np.asarray(rho_i, dtype=float))
    masses = np.atleast_1d(np.asarray(masses, dtype=float))
    V = np.asarray(V, dtype=float)
    V = np.array([float(V), 0.0, 0.0]) if V.ndim == 0 else V
    vx, vy, vz = vg.mesh
    c2 = (vx - V[0]) ** 2 + (vy - V[1]) ** 2 + (vz - V[2]) ** 2
    out = np.empty((rho_i.size,) + vg.shape)
    for s, (r, m) in enumerate(zip(rho_i, masses)):
        a = m / (2.0 * K_B * T)
        out[s] = r / m * (a / np.pi) ** 1.5 * np.exp(-a * c2)
    return out


def equilibrium_field(state: EquilibriumState, model: GasModel, phase: PhaseSpace):
    return maxwellian_on_grid(state.rho_i, state.T, state.V, model.masses, phase)


def partition_function(T, model: GasModel) -> float:
    return float(np.sum(model.degeneracies * np.exp(-model.energies / (K_B * T))))


def boltzmann_populations(rho, T, model: GasModel) -> np.ndarray:
    """Level densities ``rho g_i exp(-E_i/kT) / Q_int``."""
    x = -model.energies / (K_B * T)
    w = model.degeneracies * np.exp(x - x.max())
    return rho * w / w.sum()


def translational_energy(rho_i, T, model: GasModel) -> float:
    """Specific translational energy ``sum 3/2 n_i k T / rho`` [J/kg]."""
    rho_i = np.asarray(rho_i, dtype=float)
    return float(1.5 * K_B * T * (rho_i / model.masses).sum() / rho_i.sum())


def _thermal_energy_density(rho, T, model):
    """Energy per volume of an equilibrium gas of density ``rho`` at ``T``."""
    rho_i = boltzmann_populations(rho, T, model) if model.has_internal_energy else None
    if rho_i is None:
        raise ValueError("needs a gas with internal levels")
    return rho * (translational_energy(rho_i, T, model) + float(internal_energy(T, model)))


def solve_equilibrium_temperature(rho_i, T_tr, T_int, model: GasModel,
                                  bracket=(1.0, 1e6)) -> float:
    """Final temperature of an isochoric relaxation from ``(rho_i, T_tr)``.

    ``T_int`` is informational: the initial internal energy is taken from the
    supplied level densities. For gases without internal energy the result is
    the translational temperature (all species share ``T_tr``).
    """
    rho_i = np.asarray(rho_i, dtype=float)
    rho = rho_i.sum()
    if not model.has_internal_energy:
        return float(T_tr)
    e0 = rho * translational_energy(rho_i, T_tr, model) + float(
        (rho_i / model.masses * model.energies).sum())

    def resid(T):
        return _thermal_energy_density(rho, T, model) / e0 - 1.0

    lo, hi = bracket
    if resid(lo) > 0 or resid(hi) < 0:
        raise OutOfBracket("equilibrium temperature outside the bracket")
    return float(brentq(resid, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))


def mach_number(state: EquilibriumState, model: GasModel, gamma: float = 5.0 / 3.0) -> float:
    """Frozen Mach number ``V / sqrt(gamma k T / m_mix)``."""
    rho_i = np.asarray(state.rho_i, dtype=float)
    m_mix = rho_i.sum() / (rho_i / model.masses).sum()
    return state.V / np.sqrt(gamma * K_B * state.T / m_mix)


def _perfect_gas_jump(state, model, gamma=5.0 / 3.0):
    M = mach_number(state, model, gamma)
    r = (gamma + 1) * M * M / ((gamma - 1) * M * M + 2)
    p = 1 + 2 * gamma / (gamma + 1) * (M * M - 1)
    return r, state.T * p / r, state.V / r


def post_shock_state(upstream: EquilibriumState, model: GasModel, max_iter: int = 100,
                     tol: float = 1e-13) -> EquilibriumState:
    """Downstream equilibrium state of a steady normal shock.

    Without internal energy the closed-form perfect-gas jump (gamma = 5/3) is
    returned with the upstream composition. Otherwise mass, momentum and
    energy fluxes are balanced with Boltzmann-populated levels downstream by a
    damped Newton iteration on the downstream velocity, started from the
    perfect-gas state.
    """
    rho_i = np.asarray(upstream.rho_i, dtype=float)
    rho1, T1, V1 = rho_i.sum(), upstream.T, upstream.V
    if mach_number(upstream, model) <= 1.0:
        raise ValueError("upstream flow must be supersonic")
    r, T2, V2 = _perfect_gas_jump(upstream, model)
    if not model.has_internal_energy:
        return EquilibriumState(tuple(rho_i * r), float(T2), float(V2))

    m_mix = model.masses[0]
    if not np.allclose(model.masses, m_mix):
        raise ValueError("internal-level gases must share one mass")
    J = rho1 * V1
    P = rho1 * V1 * V1 + rho1 * K_B * T1 / m_mix
    H = 2.5 * K_B * T1 / m_mix + float(internal_energy(T1, model)) + 0.5 * V1 * V1

    def temp(V):
        return m_mix / K_B * V * (P / J - V)

    def resid(V):
        T = temp(V)
        return 2.5 * K_B * T / m_mix + float(internal_energy(T, model)) + 0.5 * V * V - H

    V = V2
    for _ in range(max_iter):
        f0 = resid(V)
        if abs(f0) <= 1e-14 * abs(H):
            break
        h = 1e-7 * V
        d = (resid(V + h) - resid(V - h)) / (2 * h)
        step = -f0 / d
        lam = 1.0
        while lam > 1e-6:
            Vn = V + lam * step
            if 0 < Vn < P / J and abs(resid(Vn)) < abs(f0):
                break
            lam *= 0.5
        else:
            if abs(step) <= 1e-10 * abs(V):
                break
            raise NoConvergence("post-shock Newton iteration stalled")
        V = Vn
        if abs(lam * step) <= tol * abs(V):
            break
    else:
        raise NoConvergence(f"post-shock state did not converge in {max_iter} iterations")
    T = temp(V)
    return EquilibriumState(tuple(boltzmann_populations(J / V, T, model)), float(T), float(V))
