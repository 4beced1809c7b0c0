"""Compiled inner loops (numba).

The weighted convolution is the O(N^6) hot spot. Spectra are passed as
separate real and imaginary float64 arrays of shape ``(Ns, N^3, C)`` with the
spatial-cell batch ``C`` last, so the innermost loop is unit-stride and
vectorises. Gain weights are looked up through a shared integer key map
``keys[e, kappa]``; loss weights through the integer ``|n|^2`` of ``kappa``.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(parallel=True, fastmath=True, cache=True)
def weighted_convolution(fr, fi, keys, kn2, gvals, lvals, pair_k, pair_l, term_ptr,
                         term_slot, term_g, term_l, eps_list, kmin, n, n_slots):
    """Sums ``sum_kappa f_k(e - kappa) f_l(kappa) W_t(e, kappa)`` per output slot.

    For every product pair ``p = (k, l)`` the terms ``term_ptr[p]:term_ptr[p+1]``
    give an output slot and a weight ``gvals[g, keys[e, kappa]] - lvals[l, kn2[kappa]]``
    (a row index of -1 drops that part). Only nodes in ``eps_list`` are
    computed. The shifted argument index always lies in ``[1, n-1]``; ``kmin``
    (0 or 1) is the lowest admissible index of the second argument.
    """
    ns, m3, nc = fr.shape
    h = n // 2
    out_r = np.zeros((n_slots, m3, nc))
    out_i = np.zeros((n_slots, m3, nc))
    npairs = pair_k.shape[0]
    for it in prange(eps_list.shape[0]):
        e = eps_list[it]
        ex = e // (n * n)
        ey = (e // n) % n
        ez = e % n
        acc_r = np.zeros((n_slots, nc))
        acc_i = np.zeros((n_slots, nc))
        pr = np.empty(nc)
        pi = np.empty(nc)
        lox = max(kmin, ex - h + 1)
        hix = min(n - 1, ex + h - 1)
        loy = max(kmin, ey - h + 1)
        hiy = min(n - 1, ey + h - 1)
        loz = max(kmin, ez - h + 1)
        hiz = min(n - 1, ez + h - 1)
        krow = keys[e]
        for kx in range(lox, hix + 1):
            ax = ex - kx + h
            for ky in range(loy, hiy + 1):
                ay = ey - ky + h
                base_k = (kx * n + ky) * n
                base_a = (ax * n + ay) * n
                for kz in range(loz, hiz + 1):
                    kap = base_k + kz
                    a = base_a + (ez - kz + h)
                    key = krow[kap]
                    q2 = kn2[kap]
                    for p in range(npairs):
                        A_r = fr[pair_k[p], a]
                        A_i = fi[pair_k[p], a]
                        B_r = fr[pair_l[p], kap]
                        B_i = fi[pair_l[p], kap]
                        t0 = term_ptr[p]
                        t1 = term_ptr[p + 1]
                        if t1 - t0 == 1:
                            w = 0.0
                            if term_g[t0] >= 0:
                                w += gvals[term_g[t0], key]
                            if term_l[t0] >= 0:
                                w -= lvals[term_l[t0], q2]
                            ar_ = acc_r[term_slot[t0]]
                            ai_ = acc_i[term_slot[t0]]
                            for c in range(nc):
                                ar_[c] += w * (A_r[c] * B_r[c] - A_i[c] * B_i[c])
                                ai_[c] += w * (A_r[c] * B_i[c] + A_i[c] * B_r[c])
                        else:
                            for c in range(nc):
                                pr[c] = A_r[c] * B_r[c] - A_i[c] * B_i[c]
                                pi[c] = A_r[c] * B_i[c] + A_i[c] * B_r[c]
                            for t in range(t0, t1):
                                w = 0.0
                                if term_g[t] >= 0:
                                    w += gvals[term_g[t], key]
                                if term_l[t] >= 0:
                                    w -= lvals[term_l[t], q2]
                                ar_ = acc_r[term_slot[t]]
                                ai_ = acc_i[term_slot[t]]
                                for c in range(nc):
                                    ar_[c] += w * pr[c]
                                    ai_[c] += w * pi[c]
        for s in range(n_slots):
            for c in range(nc):
                out_r[s, e, c] = acc_r[s, c]
                out_i[s, e, c] = acc_i[s, c]
    return out_r, out_i


@njit(parallel=True, cache=True)
def keyed_quadrature(zidx, qarg, zfac, u):
    """``out[k] = sum_p zfac[zidx[k], p] * j0(qarg[k] * u[p])``."""
    nk = zidx.shape[0]
    npt = u.shape[0]
    out = np.empty(nk)
    for k in prange(nk):
        q = qarg[k]
        row = zidx[k]
        acc = 0.0
        for p in range(npt):
            x = q * u[p]
            if abs(x) < 1e-4:
                j = 1.0 - x * x / 6.0
            else:
                j = np.sin(x) / x
            acc += zfac[row, p] * j
        out[k] = acc
    return out
