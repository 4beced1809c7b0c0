"""Brute-force evaluation of the convolution weights from their multi-dimensional form.

Verification only. The weights are evaluated straight from their definition
as integrals over the relative velocity (radius and direction) and the
scattering direction, with the Fourier exponentials summed on explicit
sphere quadratures rather than through the spherical-Bessel reduction used
in production. Cross sections may depend on the deflection cosine, in which
case the direction integrals do not factor and the full five-dimensional sum
is carried out.

All integrals share the production truncation ``|u| <= u_max``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .model import Channel, GasModel
from .weights import u_star

__all__ = ["sphere_rule", "oracle_elastic", "oracle_inelastic_gain", "oracle_inelastic_loss"]

_SCALE = (2.0 * np.pi) ** -1.5


@lru_cache(maxsize=32)
def sphere_rule(n_theta: int):
    """Product rule on the unit sphere: Gauss-Legendre in cos(theta), uniform in phi.

    Integrates spherical harmonics up to degree ``2 n_theta - 1`` exactly.
    Returns ``(points (M, 3), weights (M,))``.
    """
    x, w = np.polynomial.legendre.leggauss(n_theta)
    n_phi = 2 * n_theta
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1.0 - x * x)
    pts = np.stack([np.outer(st, np.cos(phi)), np.outer(st, np.sin(phi)),
                    np.outer(x, np.ones(n_phi))], -1).reshape(-1, 3)
    wts = np.outer(w, np.full(n_phi, 2.0 * np.pi / n_phi)).ravel()
    return pts, wts


def _sphere_for(k_max: float, minimum: int = 12):
    return sphere_rule(int(minimum + 0.6 * k_max))


def _radial(lo, hi, breaks, k_max, order=24):
    """Composite Gauss-Legendre nodes on [lo, hi] split at ``breaks``, panels sized to the phase."""
    if not hi > lo:
        return np.zeros(0), np.zeros(0)
    edges = sorted({lo, hi, *(b for b in breaks if lo < b < hi)})
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        panels = max(2, int(np.ceil((b - a) * k_max / (0.4 * order))) + 1)
        cuts = np.linspace(a, b, panels + 1)
        for c0, c1 in zip(cuts[:-1], cuts[1:]):
            h = 0.5 * (c1 - c0)
            nodes.append(c0 + h * (x + 1.0))
            weights.append(h * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _plane(k, pts, r):
    """``exp(-i r k . omega)`` at every sphere point."""
    return np.exp(-1j * r * (pts @ np.asarray(k, dtype=float)))


def _isotropic(sigma_aniso):
    return sigma_aniso is None


def oracle_elastic(zeta, xi, i, j, model: GasModel, umax: float, sigma_aniso=None,
                   n_theta: int = None):
    """``G_el(zeta, xi)`` of pair ``(i, j)`` by direct integration.

    Parameters
    ----------
    zeta, xi : array_like, shape (3,)
        Fourier vectors.
    sigma_aniso : callable ``(u, cos_chi) -> sigma``, optional
        Differential cross section as a function of relative speed and the
        cosine between pre- and post-collision relative directions. Defaults
        to the isotropic cross section of ``model``.

    Returns
    -------
    complex
        The imaginary part vanishes up to quadrature error.
    """
    zeta = np.asarray(zeta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    a = model.reduced_mass(i, j) / model.masses[i]
    az = a * zeta
    k_max = np.linalg.norm(az) + np.linalg.norm(xi - az) + np.linalg.norm(xi)
    r, rw = _radial(0.0, umax, model.cross_section.kinks(i, j), k_max)
    pts, pw = (sphere_rule(n_theta) if n_theta else _sphere_for(k_max * umax))
    total = 0.0 + 0.0j
    for u, wu in zip(r, rw):
        # direction of u: exp(+i a zeta.u - i xi.u); scattered direction: exp(-i a zeta.u')
        pre_gain = _plane(xi - az, pts, u) * pw
        pre_loss = _plane(xi, pts, u) * pw
        post = _plane(az, pts, u) * pw
        if _isotropic(sigma_aniso):
            s = float(model.cross_section.sigma(i, j, i, j, np.array([u]))[0])
            val = s * (pre_gain.sum() * post.sum() - pre_loss.sum() * pw.sum())
        else:
            sig = sigma_aniso(u, pts @ pts.T)
            val = pre_gain @ sig @ post - pre_loss @ sig @ pw
        total += wu * u**3 * val
    return _SCALE * total


def oracle_inelastic_gain(zeta, xi, channel: Channel, model: GasModel, umax: float,
                          sigma_aniso=None, n_theta: int = None):
    """Gain weight of ``channel`` (i, j -> k, l) by direct integration.

    The integration variable is the relative velocity ``u'`` of the ``(k, l)``
    pair; the ``(i, j)`` relative speed follows from energy conservation.
    ``sigma_aniso`` (if given) is the reverse-channel cross section as a
    function of ``u'`` and the deflection cosine.
    """
    zeta = np.asarray(zeta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    i, j, k, l = channel.i, channel.j, channel.k, channel.l
    mu = channel.reduced_mass
    a = mu / model.masses[i]
    az = a * zeta
    lo = u_star(channel).gain
    shift = 2.0 * channel.delta_e / mu
    k_max = np.linalg.norm(az) * math.sqrt(1.0 + abs(shift) / max(umax, 1.0) ** 2) \
        + np.linalg.norm(xi - az)
    r, rw = _radial(lo, umax, tuple(model.cross_section.kinks(k, l)) + (lo,), k_max)
    pts, pw = (sphere_rule(n_theta) if n_theta else
               _sphere_for(k_max * math.sqrt(umax**2 + max(shift, 0.0))))
    total = 0.0 + 0.0j
    for up, wu in zip(r, rw):
        u = math.sqrt(max(up * up + shift, 0.0))
        pre = _plane(az, pts, u) * pw
        post = _plane(xi - az, pts, up) * pw
        if _isotropic(sigma_aniso):
            s = float(model.cross_section.sigma(k, l, i, j, np.array([up]))[0])
            val = s * pre.sum() * post.sum()
        else:
            val = post @ sigma_aniso(up, pts @ pts.T) @ pre
        total += wu * up**3 * val
    return _SCALE * total


def oracle_inelastic_loss(xi, channel: Channel, model: GasModel, umax: float,
                          sigma_aniso=None, n_theta: int = None):
    """Loss weight of ``channel`` by direct integration."""
    xi = np.asarray(xi, dtype=float)
    i, j, k, l = channel.i, channel.j, channel.k, channel.l
    lo = u_star(channel).loss
    k_max = float(np.linalg.norm(xi))
    r, rw = _radial(lo, umax, tuple(model.cross_section.kinks(i, j)) + (lo,), k_max)
    pts, pw = (sphere_rule(n_theta) if n_theta else _sphere_for(k_max * umax))
    total = 0.0 + 0.0j
    for u, wu in zip(r, rw):
        pre = _plane(xi, pts, u) * pw
        if _isotropic(sigma_aniso):
            s = float(model.cross_section.sigma(i, j, k, l, np.array([u]))[0])
            val = s * pre.sum() * pw.sum()
        else:
            val = pre @ sigma_aniso(u, pts @ pts.T) @ pw
        total += wu * u**3 * val
    return _SCALE * total
