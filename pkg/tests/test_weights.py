import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectral_boltzmann.errors import CacheMismatch
from spectral_boltzmann.grid import build_phase_space
from spectral_boltzmann.model import Channel, GasModel, build_collision_catalog
from spectral_boltzmann.weight_oracle import (oracle_elastic, oracle_inelastic_gain,
                                              oracle_inelastic_loss, sphere_rule)
from spectral_boltzmann.weights import (CUBE_DIAGONAL, DEALIASED, PREFACTOR, QuadratureRule,
                                        build_key_map, cached_tables, load_tables,
                                        precompute_tables, save_tables, u_max, u_star,
                                        weight_elastic, weight_inelastic_gain,
                                        weight_inelastic_loss)

from conftest import M_AR


def _channel(model, i, j, k, l):
    cat = build_collision_catalog(model)
    return next(c for c in cat.elastic + cat.inelastic if (c.i, c.j, c.k, c.l) == (i, j, k, l))


def test_u_star_thresholds(two_level):
    up = _channel(two_level, 0, 0, 0, 1)
    t = u_star(up)
    assert t.gain == 0.0
    assert t.loss == pytest.approx(math.sqrt(2 * 4.14e-21 / (M_AR / 2)), rel=1e-12)
    assert t.loss == pytest.approx(499.8, abs=0.1)
    r = u_star(up.reverse())
    assert r.gain == pytest.approx(t.loss) and r.loss == 0.0
    el = u_star(_channel(two_level, 0, 1, 0, 1))
    assert (el.gain, el.loss) == (0.0, 0.0)


def test_u_max_factors():
    assert u_max(1000.0) == pytest.approx(1000.0 * 4 / (3 + math.sqrt(2)))
    assert u_max(1000.0, CUBE_DIAGONAL) == pytest.approx(2000 * math.sqrt(3))


def test_zero_node_elastic_weight_vanishes(ne_ar):
    w = weight_elastic(np.zeros(3), np.zeros(3), 0, 1, ne_ar, 2000.0)
    assert abs(w) < 1e-25


def test_loss_at_zero_closed_form(ne_ar):
    # hard sphere: 4 sqrt(2 pi) sigma umax^4 / 4
    ch = _channel(ne_ar, 0, 1, 0, 1)
    sig = (2.77e-10 + 4.17e-10) ** 2 / 16
    w = weight_inelastic_loss(np.zeros(3), ch, ne_ar, 1500.0)
    assert w == pytest.approx(PREFACTOR * sig * 1500.0**4 / 4, rel=1e-13)


def test_forbidden_loss_is_zero(two_level):
    ch = _channel(two_level, 0, 0, 1, 1)
    assert weight_inelastic_loss(np.zeros(3), ch, two_level, 100.0) == 0.0
    assert weight_inelastic_loss(np.zeros(3), ch, two_level, 2000.0) > 0.0


def test_elastic_decomposition(ne_ar, rng):
    # G_el = gain - loss with delta E = 0 and the forward cross section
    ph = build_phase_space(8, 2000.0)
    ax = ph.fourier.axis
    for _ in range(5):
        z, x = rng.choice(ax, 3), rng.choice(ax, 3)
        ch = _channel(ne_ar, 1, 0, 1, 0)
        el = weight_elastic(z, x, 1, 0, ne_ar, 1800.0)
        split = (weight_inelastic_gain(z, x, ch, ne_ar, 1800.0)
                 - weight_inelastic_loss(x, ch, ne_ar, 1800.0))
        assert el == pytest.approx(split, rel=1e-12, abs=1e-12 * abs(split))


def test_zeta_zero_gain_reduces(two_level):
    ch = _channel(two_level, 1, 1, 0, 0)
    x = np.array([0.003, -0.001, 0.002])
    g = weight_inelastic_gain(np.zeros(3), x, ch, two_level, 2000.0)
    l = weight_inelastic_loss(x, Channel(0, 0, 1, 1, -ch.delta_e, ch.reduced_mass),
                              two_level, 2000.0)
    assert np.isfinite(g) and np.isfinite(l)


def test_self_convergence(ne_ar, rng):
    ph = build_phase_space(8, 2000.0)
    z, x = rng.choice(ph.fourier.axis, (2, 4, 3))
    lo = weight_elastic(z, x, 0, 1, ne_ar, 1800.0, QuadratureRule(order=64))
    hi = weight_elastic(z, x, 0, 1, ne_ar, 1800.0, QuadratureRule(order=128))
    assert np.max(np.abs(lo - hi)) < 1e-8 * np.max(np.abs(hi))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_reflection_symmetry(seed):
    from conftest import AR, NE
    model = GasModel.hard_sphere_mixture([NE, AR])
    rng = np.random.default_rng(seed)
    z, x = rng.uniform(-0.01, 0.01, (2, 3))
    a = weight_elastic(z, x, 0, 1, model, 1500.0)
    b = weight_elastic(-z, -x, 0, 1, model, 1500.0)
    assert a == pytest.approx(b, rel=1e-13, abs=1e-30)


def test_key_maps_agree():
    n = 4
    tri = build_key_map(n, "triple")
    half = build_key_map(n, "half")
    assert tri.keys.shape == (n**3, n**3)
    # a shared key implies equal invariants under either map
    for km in (tri, half):
        assert km.keys.max() + 1 == km.n_keys


def test_tables_match_pointwise(phase8, ne_ar, tables_ne_ar8, rng):
    ax = phase8.fourier.axis
    n = phase8.nv
    um = tables_ne_ar8.umax
    dense = tables_ne_ar8.dense_elastic(0, 1)
    for _ in range(10):
        e, k = rng.integers(0, n, (2, 3))
        ei, ki = np.ravel_multi_index(e, (n,) * 3), np.ravel_multi_index(k, (n,) * 3)
        ref = weight_elastic(ax[e], ax[k], 0, 1, ne_ar, um)
        assert dense[ei, ki] == pytest.approx(ref, rel=1e-10, abs=1e-12 * abs(dense).max())


def test_tables_finite_and_loss_positive(tables_2l8):
    for key, v in tables_2l8.gain.items():
        assert np.all(np.isfinite(v))
    for key, v in tables_2l8.loss.items():
        assert np.all(np.isfinite(v))
        if v[0] != 0:
            assert v[0] > 0


def test_cache_roundtrip(tmp_path, phase8, ne_ar, tables_ne_ar8):
    path = tmp_path / "w.bin"
    save_tables(tables_ne_ar8, path)
    back = load_tables(path, phase8, ne_ar, tables_ne_ar8.order)
    for key in tables_ne_ar8.gain:
        assert np.array_equal(back.gain[key], tables_ne_ar8.gain[key])
        assert np.array_equal(back.loss[key], tables_ne_ar8.loss[key])
    with pytest.raises(CacheMismatch):
        load_tables(path, build_phase_space(8, 2500.0), ne_ar, tables_ne_ar8.order)
    path.write_bytes(b"XXXX" + path.read_bytes()[4:])
    with pytest.raises(CacheMismatch):
        load_tables(path, phase8, ne_ar, tables_ne_ar8.order)


def test_cached_tables_reuses_file(tmp_path, phase8, ne_ar):
    cat = build_collision_catalog(ne_ar)
    a = cached_tables(phase8, cat, ne_ar, QuadratureRule(), tmp_path)
    files = list(tmp_path.iterdir())
    assert len(files) == 1
    b = cached_tables(phase8, cat, ne_ar, QuadratureRule(), tmp_path)
    assert np.array_equal(a.gain[(0, 1, 0, 1)], b.gain[(0, 1, 0, 1)])


# brute-force oracle


def test_sphere_rule_integrates_plane_wave():
    pts, w = sphere_rule(30)
    assert w.sum() == pytest.approx(4 * np.pi, rel=1e-14)
    k = 17.0
    val = (w * np.exp(-1j * k * pts[:, 2])).sum()
    assert val.real == pytest.approx(4 * np.pi * np.sin(k) / k, abs=1e-12)


def test_oracle_elastic_mass_ratios(ne_ar, rng):
    # mu/m_i = 0.664 (Ne against Ar) and 0.5 (Ar against Ar)
    ph = build_phase_space(16, 3000.0)
    um = u_max(ph)
    for i, j in [(0, 1), (1, 1), (1, 0)]:
        z, x = rng.choice(ph.fourier.axis, (2, 3))
        o = oracle_elastic(z, x, i, j, ne_ar, um)
        p = weight_elastic(z, x, i, j, ne_ar, um)
        assert abs(o.imag) < 1e-10 * abs(o.real)
        assert p == pytest.approx(o.real, rel=1e-4)


def test_oracle_two_level_gain_and_loss(two_level, rng):
    ph = build_phase_space(16, 3000.0)
    um = u_max(ph)
    ch = _channel(two_level, 0, 0, 1, 1)
    z, x = ph.fourier.axis[[5, 9, 12]], ph.fourier.axis[[3, 8, 10]]
    assert weight_inelastic_gain(z, x, ch, two_level, um) == pytest.approx(
        oracle_inelastic_gain(z, x, ch, two_level, um).real, rel=1e-3)
    for x in rng.choice(ph.fourier.axis, (10, 3)):
        assert weight_inelastic_loss(x, ch, two_level, um) == pytest.approx(
            oracle_inelastic_loss(x, ch, two_level, um).real, rel=1e-3)


def test_oracle_anisotropic_path_reduces_to_isotropic(ne_ar, two_level):
    # a direction-independent sigma fed through the five-dimensional path
    z = np.array([2e-3, -1e-3, 5e-4])
    x = np.array([-1e-3, 3e-3, 1e-3])
    sig = (2.77e-10 + 4.17e-10) ** 2 / 16
    iso = oracle_elastic(z, x, 0, 1, ne_ar, 1200.0)
    full = oracle_elastic(z, x, 0, 1, ne_ar, 1200.0,
                          sigma_aniso=lambda u, c: np.full(c.shape, sig), n_theta=16)
    assert full.real == pytest.approx(iso.real, rel=1e-8)
    ch = _channel(two_level, 0, 1, 1, 1)
    xs = two_level.cross_section
    aniso = lambda u, c: np.full(c.shape, float(xs.sigma(1, 1, 0, 1, np.array([u]))[0]))
    g_iso = oracle_inelastic_gain(z, x, ch, two_level, 1200.0)
    g_full = oracle_inelastic_gain(z, x, ch, two_level, 1200.0, sigma_aniso=aniso, n_theta=16)
    assert g_full.real == pytest.approx(g_iso.real, rel=1e-8)


def test_oracle_anisotropic_forward_peaked_differs(ne_ar):
    # a forward-peaked kernel with the same total cross section changes the weight
    z = np.array([3e-3, 0.0, 0.0])
    x = np.array([1e-3, 2e-3, 0.0])
    sig = (2.77e-10 + 4.17e-10) ** 2 / 16
    iso = oracle_elastic(z, x, 0, 1, ne_ar, 1200.0, n_theta=16).real
    peaked = oracle_elastic(z, x, 0, 1, ne_ar, 1200.0, n_theta=16,
                            sigma_aniso=lambda u, c: sig * (1.0 + 0.9 * c)).real
    assert np.isfinite(peaked) and abs(peaked - iso) > 1e-3 * abs(iso)
