"""Spectral grid operations against closed-form oracles."""

import numpy as np
import pytest

from cshwave.grid import (
    dealias,
    evaluate_at,
    integrate,
    interpolate_column,
    inverse_laplacian_zero_mean,
    laplacian,
    make_grid,
    spectral_derivative,
)


@pytest.fixture(scope="module")
def grid():
    return make_grid(128, 20.0)


def _trig_field(grid, m1=3, m2=2):
    x1, x2 = grid.mesh()
    k1 = 2.0 * np.pi * m1 / grid.L
    k2 = 2.0 * np.pi * m2 / grid.L
    return np.sin(k1 * x1) * np.cos(k2 * x2), k1, k2


def test_spectral_derivative_matches_trig_oracle(grid):
    f, k1, k2 = _trig_field(grid)
    x1, x2 = grid.mesh()
    d1_true = k1 * np.cos(k1 * x1) * np.cos(k2 * x2)
    d2_true = -k2 * np.sin(k1 * x1) * np.sin(k2 * x2)
    assert np.max(np.abs(spectral_derivative(grid, f, 1) - d1_true)) < 1e-12
    assert np.max(np.abs(spectral_derivative(grid, f, 2) - d2_true)) < 1e-12


def test_spectral_derivative_complex_field(grid):
    x1, x2 = grid.mesh()
    k = 2.0 * np.pi * 4 / grid.L
    f = np.exp(1j * k * x1) * np.cos(k * x2)
    d1 = spectral_derivative(grid, f, 1)
    assert np.max(np.abs(d1 - 1j * k * f)) < 1e-11


def test_spectral_derivative_rejects_bad_axis(grid):
    f, _, _ = _trig_field(grid)
    with pytest.raises(ValueError):
        spectral_derivative(grid, f, 0)


def test_laplacian_matches_trig_oracle(grid):
    f, k1, k2 = _trig_field(grid)
    assert np.max(np.abs(laplacian(grid, f) + (k1**2 + k2**2) * f)) < 1e-11


def test_inverse_laplacian_roundtrip(grid):
    u_true, k1, k2 = _trig_field(grid, m1=1, m2=2)
    f = -(k1**2 + k2**2) * u_true
    u = inverse_laplacian_zero_mean(grid, f)
    assert np.max(np.abs(u - u_true)) < 1e-12


def test_inverse_laplacian_rejects_nonzero_mean(grid):
    f = np.ones(grid.shape)
    with pytest.raises(ValueError, match="mean-free"):
        inverse_laplacian_zero_mean(grid, f)


def test_dealias_is_idempotent(grid):
    rng = np.random.default_rng(5)
    f = rng.standard_normal(grid.shape)
    once = dealias(grid, f)
    twice = dealias(grid, once)
    eps = np.finfo(float).eps
    assert np.max(np.abs(twice - once)) < 32 * eps * np.max(np.abs(once))


def test_dealias_kills_high_modes_keeps_low(grid):
    x1, x2 = grid.mesh()
    m_hi = grid.n // 2 - 1
    lo = np.cos(2.0 * np.pi * 3 * x1 / grid.L)
    hi = np.cos(2.0 * np.pi * m_hi * x2 / grid.L)
    out = dealias(grid, lo + hi)
    assert np.max(np.abs(out - lo)) < 1e-12


def test_integrate_gaussian_closed_form():
    # integral of exp(-r^2) over the plane is pi; tails are ~1e-44 at L=20
    grid = make_grid(128, 20.0)
    r2 = grid.radius() ** 2
    assert abs(integrate(grid, np.exp(-r2)) - np.pi) < 1e-12


def test_interpolate_column_offgrid_oracle(grid):
    x1, x2 = grid.mesh()
    k1 = 2.0 * np.pi * 2 / grid.L
    k2 = 2.0 * np.pi * 5 / grid.L
    f = np.cos(k1 * x1) * np.sin(k2 * x2)
    tau = 1.2345  # not a grid node
    col = interpolate_column(grid, f, tau)
    truth = np.cos(k1 * tau) * np.sin(k2 * grid.x2)
    assert np.max(np.abs(col - truth)) < 1e-12


def test_interpolate_column_at_node_matches_slice(grid):
    rng = np.random.default_rng(11)
    f = rng.standard_normal(grid.shape)
    i = 37
    col = interpolate_column(grid, f, float(grid.x1[i]))
    assert np.max(np.abs(col - f[i, :])) < 1e-10 * np.max(np.abs(f))


def test_evaluate_at_matches_closed_form(grid):
    x1, x2 = grid.mesh()
    k1 = 2.0 * np.pi * 3 / grid.L
    k2 = 2.0 * np.pi * 1 / grid.L
    f = np.sin(k1 * x1) * np.cos(k2 * x2) + 0.5
    rng = np.random.default_rng(2)
    pts = rng.uniform(-grid.L / 2, grid.L / 2, size=(40, 2))
    vals = evaluate_at(grid, f, pts)
    truth = np.sin(k1 * pts[:, 0]) * np.cos(k2 * pts[:, 1]) + 0.5
    assert np.max(np.abs(vals - truth)) < 1e-11


def test_evaluate_at_accepts_precomputed_spectrum(grid):
    rng = np.random.default_rng(3)
    f = rng.standard_normal(grid.shape)
    f = dealias(grid, f)
    pts = rng.uniform(-grid.L / 2, grid.L / 2, size=(10, 2))
    direct = evaluate_at(grid, f, pts)
    via_spec = evaluate_at(grid, None, pts, spectrum=np.fft.fft2(f))
    assert np.max(np.abs(direct - via_spec)) < 1e-12 * max(1.0, np.max(np.abs(direct)))


def test_shape_mismatch_raises(grid):
    with pytest.raises(ValueError, match="shape"):
        laplacian(grid, np.zeros((3, 3)))
