"""Discrete Fourier transforms on centred grids.

Both transforms reduce to unscaled FFTs once the grid offsets are pulled out
as phase factors:

    fhat(zeta_e) = exp(-i delta(e)) / (2 pi)^{3/2} * FFT[f*](e)
    f*(v_k)      = w_k f(v_k) exp(i Lzeta dv (kx+ky+kz)) dv^3
    delta(e)     = Lv (3 Lzeta - dzeta (ex+ey+ez))

and symmetrically for the inverse. All scaling lives in the explicit factors,
so the FFT calls are unnormalised in both directions. The last three axes of
the input are the velocity (or Fourier) axes; any leading axes are batched.
"""

from __future__ import annotations

import numpy as np

from .grid import PhaseSpace

__all__ = ["forward_transform", "inverse_transform", "direct_forward", "direct_inverse"]

_AXES = (-3, -2, -1)
_NORM = (2.0 * np.pi) ** 1.5


def _index_sum(n):
    i = np.arange(n)
    return i[:, None, None] + i[None, :, None] + i[None, None, :]


def _phases(phase: PhaseSpace):
    vg, fg = phase.velocity, phase.fourier
    s = _index_sum(vg.nv)
    pre_f = np.exp(1j * fg.lzeta * vg.dv * s) * vg.weights * vg.cell_volume
    post_f = np.exp(-1j * vg.lv * (3.0 * fg.lzeta - fg.dzeta * s)) / _NORM
    pre_i = np.exp(-1j * vg.lv * fg.dzeta * s) * fg.weights * fg.cell_volume
    post_i = np.exp(1j * fg.lzeta * (3.0 * vg.lv - vg.dv * s)) / _NORM
    return pre_f, post_f, pre_i, post_i


_cache: dict = {}


def _cached_phases(phase):
    key = (phase.nv, phase.lv)
    if key not in _cache:
        _cache[key] = _phases(phase)
    return _cache[key]


def forward_transform(f, phase: PhaseSpace) -> np.ndarray:
    """Fourier transform of grid values ``f`` (shape ``(..., N, N, N)``)."""
    pre, post, _, _ = _cached_phases(phase)
    return post * np.fft.fftn(np.asarray(f) * pre, axes=_AXES, norm="backward")


def inverse_transform(ghat, phase: PhaseSpace) -> np.ndarray:
    """Inverse transform of Fourier-grid values ``ghat``; complex output."""
    _, _, pre, post = _cached_phases(phase)
    # norm="forward" leaves the inverse FFT unscaled
    return post * np.fft.ifftn(np.asarray(ghat) * pre, axes=_AXES, norm="forward")


def direct_forward(f, phase: PhaseSpace) -> np.ndarray:
    """O(N^6) evaluation of the discrete transform definition (testing aid)."""
    vg, fg = phase.velocity, phase.fourier
    v = np.stack(np.meshgrid(vg.axis, vg.axis, vg.axis, indexing="ij"), -1).reshape(-1, 3)
    z = np.stack(np.meshgrid(fg.axis, fg.axis, fg.axis, indexing="ij"), -1).reshape(-1, 3)
    kern = np.exp(-1j * z @ v.T)
    w = vg.weights.ravel() * vg.cell_volume
    out = kern @ (w * np.asarray(f).reshape(-1)) / _NORM
    return out.reshape(vg.shape)


def direct_inverse(ghat, phase: PhaseSpace) -> np.ndarray:
    vg, fg = phase.velocity, phase.fourier
    v = np.stack(np.meshgrid(vg.axis, vg.axis, vg.axis, indexing="ij"), -1).reshape(-1, 3)
    z = np.stack(np.meshgrid(fg.axis, fg.axis, fg.axis, indexing="ij"), -1).reshape(-1, 3)
    kern = np.exp(1j * v @ z.T)
    w = fg.weights.ravel() * fg.cell_volume
    out = kern @ (w * np.asarray(ghat).reshape(-1)) / _NORM
    return out.reshape(vg.shape)
