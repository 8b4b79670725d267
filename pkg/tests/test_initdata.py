"""Initial data families against closed-form gaussian integrals.

Gaussian profile is amplitude * exp(-r^2 / sigma^2). For amplitude 1,
sigma 1 the oracles below are textbook radial integrals:

    int |phi|^2        = pi/2
    int |grad phi|^2   = pi
    int |phi|^4        = pi/4
    int r^2 |phi|^4    = pi/16
"""

import numpy as np
import pytest

from cshwave.grid import integrate, make_grid, spectral_derivative
from cshwave.initdata import (
    InitialDataSpec,
    build_data,
    energy_norms,
    reflect_x1,
    rotate90,
    support_radius,
)

L = 20.0


@pytest.fixture(scope="module")
def grid():
    return make_grid(256, L)


@pytest.fixture(scope="module")
def gauss(grid):
    phi0, psi0 = build_data(grid, InitialDataSpec(family="gaussian"))
    return phi0, psi0


def test_gaussian_l2_closed_form(grid, gauss):
    phi0, _ = gauss
    assert abs(integrate(grid, np.abs(phi0) ** 2) - np.pi / 2) < 1e-11


def test_gaussian_gradient_closed_form(grid, gauss):
    phi0, _ = gauss
    g = np.abs(spectral_derivative(grid, phi0, 1)) ** 2 + np.abs(
        spectral_derivative(grid, phi0, 2)
    ) ** 2
    assert abs(integrate(grid, g) - np.pi) < 1e-10


def test_gaussian_quartic_closed_form(grid, gauss):
    phi0, _ = gauss
    assert abs(integrate(grid, np.abs(phi0) ** 4) - np.pi / 4) < 1e-11


def test_gaussian_charge_closed_form(grid):
    phi0, psi0 = build_data(grid, InitialDataSpec(family="gaussian", velocity="iphi"))
    q = integrate(grid, (phi0 * np.conj(psi0)).imag)
    assert abs(q + np.pi / 2) < 1e-11


def test_zero_velocity_gives_zero_psi(gauss):
    _, psi0 = gauss
    assert np.max(np.abs(psi0)) == 0.0


def test_energy_norms_gaussian_e00(grid, gauss):
    phi0, psi0 = gauss
    norms = energy_norms(grid, phi0, psi0, p=3.0)
    # real data: gauge potential vanishes, norms are the plain integrals
    assert abs(norms.e00 - (np.pi + np.pi / 4)) < 1e-9


def test_energy_norms_gaussian_e02_radial_quadrature(grid, gauss):
    """Independent oracle: dense radial trapezoid of the same integrand."""
    phi0, psi0 = gauss
    norms = energy_norms(grid, phi0, psi0, p=3.0)
    r = np.linspace(0.0, 12.0, 400_001)
    w2 = (1.0 + r) ** 2
    grad2 = 4.0 * r**2 * np.exp(-2.0 * r**2)
    quart = np.exp(-4.0 * r**2)
    e02_true = np.trapezoid(w2 * (grad2 + quart) * 2.0 * np.pi * r, r)
    # the (1+r)^2 weight has a kink at the origin, so the grid's rectangle
    # rule is only ~O(h^3) accurate here; 1e-4 still catches factor slips
    assert abs(norms.e02 - e02_true) < 1e-4 * e02_true


def test_energy_norms_scale_quadratically_at_small_amplitude(grid):
    """e00 ~ a^2 (1 + O(a^2)): the quartic term is the only deviation."""
    a = 1e-4
    phi0, psi0 = build_data(grid, InitialDataSpec(family="gaussian", amplitude=a))
    norms = energy_norms(grid, phi0, psi0, p=3.0)
    assert abs(norms.e00 - a**2 * np.pi) < 1e-6 * a**2 * np.pi


def test_bump_support_and_peak(grid):
    spec = InitialDataSpec(family="bump", amplitude=0.5)
    phi0, _ = build_data(grid, spec)
    r = grid.radius()
    # dealiasing rings slightly outside r=1; bulk support respected
    assert np.max(np.abs(phi0)[r > 1.5]) < 2e-3
    assert abs(np.max(np.abs(phi0)) - 0.5) < 1e-2


def test_ring_peaks_at_radius(grid):
    spec = InitialDataSpec(family="ring", amplitude=1.0, radius=3.0)
    phi0, _ = build_data(grid, spec)
    r = grid.radius()
    peak_r = r.flat[int(np.argmax(np.abs(phi0)))]
    assert abs(peak_r - 3.0) < 0.2


def test_random_family_is_seeded_and_bandlimited(grid):
    spec = InitialDataSpec(family="random", amplitude=0.3, cutoff=6, seed=42, velocity="random")
    a1, b1 = build_data(grid, spec)
    a2, b2 = build_data(grid, spec)
    assert np.array_equal(a1, a2) and np.array_equal(b1, b2)
    assert abs(np.max(np.abs(a1)) - 0.3) < 1e-12
    spec2 = InitialDataSpec(family="random", amplitude=0.3, cutoff=6, seed=43, velocity="random")
    a3, _ = build_data(grid, spec2)
    assert not np.array_equal(a1, a3)


def test_winding_vanishes_at_center(grid):
    spec = InitialDataSpec(family="gaussian", winding=1)
    phi0, _ = build_data(grid, spec)
    i0 = grid.n // 2  # node at the origin
    assert abs(phi0[i0, i0]) < 1e-6


def test_support_radius_orders():
    base = InitialDataSpec(family="gaussian")
    assert support_radius(base) > 3.0
    offc = InitialDataSpec(family="gaussian", center=(2.0, 1.0))
    assert support_radius(offc) > support_radius(base) + 2.0
    assert support_radius(InitialDataSpec(family="bump")) == 1.0
    assert support_radius(InitialDataSpec(family="random")) == 0.0


def test_rotate90_is_fourfold(grid):
    rng = np.random.default_rng(0)
    f = rng.standard_normal(grid.shape)
    g = rotate90(rotate90(rotate90(rotate90(f))))
    assert np.array_equal(f, g)


def test_rotate90_pointwise_convention(grid):
    x1, x2 = grid.mesh()
    f = x1 + 10.0 * x2  # out(x1, x2) should be x2 - 10 x1
    g = rotate90(f * np.ones(grid.shape))
    x1f, x2f = np.broadcast_arrays(x1, x2)
    # skip the -L/2 edge rows: -L/2 has no negative on the periodic grid
    inner = slice(1, None)
    expect = (x2f - 10.0 * x1f)[inner, inner]
    assert np.max(np.abs(g[inner, inner] - expect)) < 1e-10


def test_reflect_x1_involution_and_convention(grid):
    x1, x2 = grid.mesh()
    f = np.sin(2 * np.pi * x1 / grid.L) * np.cos(4 * np.pi * x2 / grid.L)
    f = f * np.ones(grid.shape)
    g = reflect_x1(f)
    assert np.max(np.abs(g + f)) < 1e-12  # odd in x1
    assert np.array_equal(reflect_x1(g), f)
