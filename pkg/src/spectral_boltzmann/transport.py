"""One-dimensional finite-volume transport with MUSCL reconstruction.

The distribution of a 1-D run is stored as ``(Nc + 4, Ns, N, N, N)``: the
``Nc = Nx - 1`` interior cells framed by two ghost cells per side. Fluxes act
along ``x`` only, so the advection speed of velocity node ``k`` is ``v_kx``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import BlowUp

__all__ = [
    "NGHOST", "SpatialGrid", "build_spatial_grid", "van_albada", "minmod", "LIMITERS",
    "reconstruct", "numerical_flux", "flux_divergence", "compute_time_step",
    "apply_boundary_conditions", "advance", "steady_residual", "align_shock",
]

NGHOST = 2


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform finite-volume grid with ``nx`` nodes on ``[-l_minus, l_plus]``."""

    nx: int
    l_minus: float
    l_plus: float

    def __post_init__(self):
        if self.nx < 2:
            raise ValueError("at least two grid nodes are required")
        if not (self.l_minus + self.l_plus) > 0:
            raise ValueError("empty spatial domain")

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.l_minus, self.l_plus, self.nx)

    @property
    def ncells(self) -> int:
        return self.nx - 1

    @cached_property
    def centroids(self) -> np.ndarray:
        x = self.nodes
        return 0.5 * (x[1:] + x[:-1])

    @cached_property
    def volumes(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def interior(self) -> slice:
        return slice(NGHOST, NGHOST + self.ncells)


def build_spatial_grid(nx: int, l_minus: float, l_plus: float) -> SpatialGrid:
    return SpatialGrid(int(nx), float(l_minus), float(l_plus))


def van_albada(r):
    r = np.asarray(r)
    return np.where(r > 0, (r * r + r) / (r * r + 1.0), 0.0)


def minmod(r):
    return np.clip(r, 0.0, 1.0)


LIMITERS: dict[str, Callable] = {"van_albada": van_albada, "minmod": minmod}


def _ratio(num, den, tiny=1e-300):
    small = np.abs(den) < tiny
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(small, 0.0, num / np.where(small, 1.0, den))


def reconstruct(f, limiter=van_albada):
    """Face values ``(f_L, f_R)`` at every face between padded cells ``p`` and ``p+1``.

    ``f`` has the cell axis first (ghosts included). Faces ``p = 1 .. len(f) - 3``
    are returned, i.e. every face whose four-point stencil is available.
    """
    fm, f0, f1, f2 = f[:-3], f[1:-2], f[2:-1], f[3:]
    d_left = f0 - fm
    d_mid = f1 - f0
    d_right = f2 - f1
    f_left = f0 + 0.5 * limiter(_ratio(d_mid, d_left)) * d_left
    f_right = f1 - 0.5 * limiter(_ratio(d_mid, d_right)) * d_right
    return f_left, f_right


def numerical_flux(f_left, f_right, vx):
    """Upwind flux ``max(vx, 0) f_L + min(vx, 0) f_R``; ``vx`` broadcasts on the x-velocity axis."""
    return np.maximum(vx, 0.0) * f_left + np.minimum(vx, 0.0) * f_right


def flux_divergence(f, grid: SpatialGrid, vx, limiter=van_albada):
    """``(F_{s+1/2} - F_{s-1/2}) / dc_s`` for the interior cells."""
    fl, fr = reconstruct(f, limiter)
    F = numerical_flux(fl, fr, vx)
    # F[j] sits between padded cells j+1 and j+2, so the first interior cell
    # (padded index NGHOST) has its left face at j = NGHOST - 2
    lo = NGHOST - 2
    Fm = F[lo:lo + grid.ncells]
    Fp = F[lo + 1:lo + 1 + grid.ncells]
    vol = grid.volumes.reshape((-1,) + (1,) * (f.ndim - 1))
    return (Fp - Fm) / vol


def compute_time_step(dt_c: float, cfl: float, lv: float, volumes=None) -> float:
    """Global step ``min_s CFL / (1/dt_c + Lv/dc_s)``; homogeneous runs pass ``volumes=None``."""
    if not dt_c > 0:
        raise ValueError("collision time step must be positive")
    if not 0 < cfl <= 1:
        raise ValueError("CFL must lie in (0, 1]")
    if volumes is None:
        return cfl * dt_c
    dc = float(np.min(volumes))
    return cfl / (1.0 / dt_c + lv / dc)


def apply_boundary_conditions(f, left, right):
    """Fill both ghost layers of each side with fixed states (in place)."""
    f[:NGHOST] = left
    f[-NGHOST:] = right
    return f


def advance(f, dt, collision=None, grid: SpatialGrid = None, vx=None, limiter=van_albada,
            ceiling: float = np.inf):
    """One forward-Euler step.

    Homogeneous mode (``grid is None``): ``f`` is ``(Ns, N, N, N)`` or a batch
    of independent cells and only the collision term acts. Otherwise ``f``
    carries ghost cells, which are left untouched.
    """
    if grid is None:
        new = f + dt * collision(f) if collision is not None else f.copy()
    else:
        interior = f[grid.interior]
        rhs = -flux_divergence(f, grid, vx, limiter)
        if collision is not None:
            rhs = rhs + collision(interior)
        new = f.copy()
        new[grid.interior] = interior + dt * rhs
    if not np.all(np.isfinite(new)) or np.abs(new).max() > ceiling:
        raise BlowUp("distribution became non-finite or exceeded the ceiling")
    return new


def steady_residual(f_new, f_old, dt, grid: SpatialGrid = None) -> float:
    """Relative residual ``||f^{n+1} - f^n||_1 / (dt ||f^n||_1)`` in units of 1/s."""
    sl = slice(None) if grid is None else grid.interior
    num = np.abs(f_new[sl] - f_old[sl]).sum()
    den = np.abs(f_old[sl]).sum()
    return float(num / (dt * den)) if den > 0 else 0.0


def align_shock(x, rho, rho_up=None, rho_down=None):
    """Shift ``x`` so that the normalised density crosses 0.5 at ``x = 0``.

    The crossing is located by linear interpolation between the first pair
    of cells that brackets 0.5. Endpoint densities default to the first and
    last profile values.
    """
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    rho_up = rho[0] if rho_up is None else rho_up
    rho_down = rho[-1] if rho_down is None else rho_down
    s = (rho - rho_up) / (rho_down - rho_up)
    idx = np.nonzero((s[:-1] - 0.5) * (s[1:] - 0.5) <= 0)[0]
    if idx.size == 0:
        raise ValueError("normalised density never crosses 0.5")
    i = idx[0]
    t = 0.5 if s[i + 1] == s[i] else (0.5 - s[i]) / (s[i + 1] - s[i])
    x0 = x[i] + t * (x[i + 1] - x[i])
    return x - x0, x0
