"""Velocity and Fourier grids.

The velocity cube ``[-Lv, Lv)^3`` is sampled with ``Nv`` nodes per axis and the
Fourier cube ``[-Lzeta, Lzeta)^3`` with the same count, coupled through
``dzeta * dv = 2 pi / Nv`` so that the discrete transforms are plain FFTs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidGrid

__all__ = ["VelocityGrid", "FourierGrid", "PhaseSpace",
           "build_velocity_grid", "build_fourier_grid", "build_phase_space"]


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform velocity grid with unit rectangle-rule weights."""

    nv: int
    lv: float

    @property
    def dv(self) -> float:
        return 2.0 * self.lv / self.nv

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.lv + np.arange(self.nv) * self.dv

    @cached_property
    def weights_1d(self) -> np.ndarray:
        return np.ones(self.nv)

    @cached_property
    def weights(self) -> np.ndarray:
        w = self.weights_1d
        return w[:, None, None] * w[None, :, None] * w[None, None, :]

    @cached_property
    def mesh(self):
        """Tuple ``(vx, vy, vz)`` of broadcastable 3-D arrays, index order (kx, ky, kz)."""
        a = self.axis
        return a[:, None, None], a[None, :, None], a[None, None, :]

    @cached_property
    def speed_squared(self) -> np.ndarray:
        vx, vy, vz = self.mesh
        return vx * vx + vy * vy + vz * vz

    @property
    def cell_volume(self) -> float:
        return self.dv**3

    @property
    def shape(self):
        return (self.nv,) * 3

    def node(self, k) -> np.ndarray:
        return -self.lv + np.asarray(k, dtype=float) * self.dv


@dataclass(frozen=True)
class FourierGrid:
    nv: int
    lzeta: float

    @property
    def dzeta(self) -> float:
        return 2.0 * self.lzeta / self.nv

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.lzeta + np.arange(self.nv) * self.dzeta

    @cached_property
    def weights_1d(self) -> np.ndarray:
        return np.ones(self.nv)

    @cached_property
    def weights(self) -> np.ndarray:
        w = self.weights_1d
        return w[:, None, None] * w[None, :, None] * w[None, None, :]

    @property
    def cell_volume(self) -> float:
        return self.dzeta**3


@dataclass(frozen=True)
class PhaseSpace:
    """Paired velocity and Fourier grids."""

    velocity: VelocityGrid
    fourier: FourierGrid

    @property
    def nv(self) -> int:
        return self.velocity.nv

    @property
    def lv(self) -> float:
        return self.velocity.lv

    def fingerprint(self) -> str:
        return hashlib.sha256(repr((self.nv, float(self.lv))).encode()).hexdigest()[:16]


def build_velocity_grid(nv: int, lv: float) -> VelocityGrid:
    if int(nv) != nv or nv < 4 or nv % 2:
        raise InvalidGrid(f"Nv must be an even integer >= 4, got {nv!r}")
    if not lv > 0:
        raise InvalidGrid(f"Lv must be positive, got {lv!r}")
    return VelocityGrid(int(nv), float(lv))


def build_fourier_grid(vgrid: VelocityGrid) -> FourierGrid:
    return FourierGrid(vgrid.nv, np.pi * vgrid.nv / (2.0 * vgrid.lv))


def build_phase_space(nv: int, lv: float) -> PhaseSpace:
    vg = build_velocity_grid(nv, lv)
    return PhaseSpace(vg, build_fourier_grid(vg))
