import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectral_boltzmann.errors import BlowUp
from spectral_boltzmann.transport import (NGHOST, advance, align_shock,
                                          apply_boundary_conditions, build_spatial_grid,
                                          compute_time_step, flux_divergence, minmod,
                                          reconstruct, steady_residual, van_albada)


def test_grid_geometry():
    g = build_spatial_grid(201, 2e-2, 2e-2)
    assert g.ncells == 200
    assert g.volumes == pytest.approx(np.full(200, 2e-4))
    assert g.centroids[0] == pytest.approx(-2e-2 + 1e-4)
    assert g.interior == slice(NGHOST, NGHOST + 200)


@settings(max_examples=50, deadline=None)
@given(r=st.floats(-50.0, 50.0))
def test_limiters_tvd(r):
    for phi in (van_albada, minmod):
        v = float(phi(r))
        assert 0.0 <= v <= 2.0
        if r <= 0:
            assert v == 0.0
    assert float(van_albada(1.0)) == pytest.approx(1.0)


def test_time_step():
    assert compute_time_step(1e-9, 1.0, 3000.0) == 1e-9
    dt = compute_time_step(1e-8, 0.5, 3200.0, np.full(200, 2e-4))
    assert dt == pytest.approx(0.5 / (1e8 + 3200.0 / 2e-4))
    with pytest.raises(ValueError):
        compute_time_step(1e-9, 1.5, 3000.0)


def test_reconstruction_exact_for_linear():
    f = np.arange(10.0)[:, None] * 2.0 + 1.0
    fl, fr = reconstruct(f)
    # face between cells p and p+1 for p = 1..7
    faces = np.arange(1, 8) * 2.0 + 2.0
    assert np.allclose(fl[:, 0], faces)
    assert np.allclose(fr[:, 0], faces)


def test_uniform_state_has_no_flux():
    g = build_spatial_grid(11, 1.0, 1.0)
    f = np.ones((g.ncells + 4, 1, 2, 2, 2))
    vx = np.array([-1.0, 2.0])[:, None, None]
    assert np.allclose(flux_divergence(f, g, vx), 0.0)


def test_upwind_advection_conserves_and_moves():
    g = build_spatial_grid(101, 1.0, 1.0)
    x = g.centroids
    f = np.zeros((g.ncells + 4, 1, 1, 1, 1))
    f[2:-2, 0, 0, 0, 0] = np.exp(-(x / 0.1) ** 2)
    vx = np.ones((1, 1, 1))
    dt = 0.5 * g.volumes[0]
    mass0 = f[g.interior].sum()
    for _ in range(40):
        f = advance(f, dt, grid=g, vx=vx)
    assert f[g.interior].sum() == pytest.approx(mass0, rel=1e-10)
    centre = (x * f[g.interior, 0, 0, 0, 0]).sum() / f[g.interior].sum()
    assert centre == pytest.approx(40 * dt, abs=0.02)
    assert f.min() > -1e-12


def test_boundary_ghosts_are_fixed():
    g = build_spatial_grid(11, 1.0, 1.0)
    f = np.zeros((g.ncells + 4, 1, 1, 1, 1))
    apply_boundary_conditions(f, 3.0, 5.0)
    new = advance(f, 1e-3, grid=g, vx=np.ones((1, 1, 1)))
    assert np.all(new[:2] == 3.0) and np.all(new[-2:] == 5.0)


def test_blowup():
    with pytest.raises(BlowUp):
        advance(np.ones(4), 1.0, collision=lambda f: f * np.inf)
    with pytest.raises(BlowUp):
        advance(np.ones(4), 1.0, collision=lambda f: 10 * f, ceiling=5.0)


def test_steady_residual_zero_for_identical():
    f = np.random.default_rng(0).random((6, 3))
    assert steady_residual(f, f, 1e-3) == 0.0


def test_align_shock():
    x = np.linspace(-1, 1, 201)
    rho = 1.0 + 2.0 / (1.0 + np.exp(-(x - 0.3) / 0.05))
    xs, x0 = align_shock(x, rho, 1.0, 3.0)
    assert x0 == pytest.approx(0.3, abs=1e-3)
    assert xs[100] == pytest.approx(-x0)
    with pytest.raises(ValueError):
        align_shock(x, np.ones_like(x), 1.0, 3.0)
