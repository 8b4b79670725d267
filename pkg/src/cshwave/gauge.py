"""Coulomb-gauge elliptic reduction of the gauge sector.

Under div a = 0 the slaved curvature turns into a triangular chain of
periodic Poisson problems, solved spectrally:

    lap a1 =  d2 j0          (from f12 = -j0)
    lap a2 = -d1 j0
    lap a0 = -d1 j2 + d2 j1  (from f01 = j2, f02 = -j1)

j0 needs no potential, j1/j2 need only (a1, a2), and a0 closes the chain, so
one pass resolves everything. The inversion drops the k = 0 mode; on the
torus that subtracts the spatial mean of each source, which is the standard
neutralizing-background proxy for the plane. Consequences, both checked by
``constraint_residuals``:

* div a vanishes to roundoff by construction (the two multiplier chains
  commute exactly).
* curl a reproduces -(j0 - mean(j0)), not -j0: the uniform part
  charge / L^2 cannot be carried by a periodic potential. Residuals are
  therefore evaluated against the mean-free sources, and the leftover
  background is reported separately.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import Grid2D, integrate, spectral_derivative
from .state import Current, FieldState, GaugePotential, compute_current
from . import kernels

__all__ = [
    "solve_gauge",
    "potentials_from_charge_density",
    "temporal_potential_from_currents",
    "ConstraintResiduals",
    "constraint_residuals",
]


@lru_cache(maxsize=8)
def _poisson_multipliers(grid: Grid2D):
    """Fused (inverse laplacian o derivative) multipliers in rfft2 layout."""
    ik1 = 1j * grid.k.copy()
    ik1[grid.n // 2] = 0.0
    ik2 = 1j * grid.kr.copy()
    ik2[-1] = 0.0
    inv = grid._invlap_half
    m_a1 = inv * ik2[None, :]
    m_a2 = -inv * ik1[:, None]
    m_d1 = inv * ik1[:, None]
    m_d2 = inv * ik2[None, :]
    return m_a1, m_a2, m_d1, m_d2


def potentials_from_charge_density(grid: Grid2D, j0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(a1, a2) solving lap a1 = d2 j0, lap a2 = -d1 j0, zero mean."""
    m_a1, m_a2, _, _ = _poisson_multipliers(grid)
    j0_hat = np.fft.rfft2(j0)
    a1 = np.fft.irfft2(m_a1 * j0_hat, s=grid.shape)
    a2 = np.fft.irfft2(m_a2 * j0_hat, s=grid.shape)
    return a1, a2


def temporal_potential_from_currents(grid: Grid2D, j1: np.ndarray, j2: np.ndarray) -> np.ndarray:
    """a0 solving lap a0 = -d1 j2 + d2 j1, zero mean."""
    _, _, m_d1, m_d2 = _poisson_multipliers(grid)
    a0 = np.fft.irfft2(
        m_d2 * np.fft.rfft2(j1) - m_d1 * np.fft.rfft2(j2), s=grid.shape
    )
    return a0


def solve_gauge(
    state: FieldState,
    dphi1: np.ndarray | None = None,
    dphi2: np.ndarray | None = None,
) -> GaugePotential:
    grid = state.grid
    if dphi1 is None:
        dphi1 = spectral_derivative(grid, state.phi, 1)
    if dphi2 is None:
        dphi2 = spectral_derivative(grid, state.phi, 2)
    j0 = kernels.charge_density(state.phi, state.psi)
    a1, a2 = potentials_from_charge_density(grid, j0)
    j1 = kernels.spatial_current(state.phi, dphi1, a1)
    j2 = kernels.spatial_current(state.phi, dphi2, a2)
    a0 = temporal_potential_from_currents(grid, j1, j2)
    return GaugePotential(a0=a0, a1=a1, a2=a2)


@dataclass(frozen=True)
class ConstraintResiduals:
    """Sup-norm residuals of the gauge constraints, mean-adjusted.

    ``background`` is the uniform charge density charge / L^2 that the
    periodic proxy cannot absorb; the mean-adjusted residuals measure solver
    fidelity, the background measures the proxy's distance from the plane.
    Temporal entries are None unless neighbouring potentials were supplied.
    """

    coulomb_abs: float
    coulomb_rel: float
    spatial_abs: float
    spatial_rel: float
    background: float
    temporal1_abs: float | None = None
    temporal2_abs: float | None = None
    temporal1_rel: float | None = None
    temporal2_rel: float | None = None


def _supnorm(arr: np.ndarray) -> float:
    return float(np.max(np.abs(arr)))


def constraint_residuals(
    state: FieldState,
    pot: GaugePotential,
    current: Current | None = None,
    pot_prev: GaugePotential | None = None,
    pot_next: GaugePotential | None = None,
    dt: float | None = None,
) -> ConstraintResiduals:
    """Gauge-condition and curvature-constraint residuals at one state.

    With only ``pot_prev``: one-sided O(dt) temporal residuals. With both
    ``pot_prev`` and ``pot_next``: centered O(dt^2) residuals about the
    state's own time.
    """
    grid = state.grid
    if current is None:
        current = compute_current(state, pot)
    area = grid.L**2
    # Relative residuals are measured against the size of the terms feeding
    # the constraint, not against the current itself: real-valued solutions
    # have identically vanishing currents, and residual/|j| would then just
    # amplify roundoff into a meaningless O(1) number.
    sup_phi = _supnorm(state.phi)
    sup_grad = max(
        _supnorm(spectral_derivative(grid, state.phi, 1)),
        _supnorm(spectral_derivative(grid, state.phi, 2)),
    )
    sup_a = max(_supnorm(pot.a0), _supnorm(pot.a1), _supnorm(pot.a2))
    field_scale = sup_phi * (_supnorm(state.psi) + sup_grad) + sup_a * sup_phi**2
    tiny = np.finfo(float).tiny
    div_a = spectral_derivative(grid, pot.a1, 1) + spectral_derivative(grid, pot.a2, 2)
    coulomb_abs = _supnorm(div_a)
    coulomb_rel = coulomb_abs / (1.0 + _supnorm(pot.a1) + _supnorm(pot.a2))
    curl_a = spectral_derivative(grid, pot.a2, 1) - spectral_derivative(grid, pot.a1, 2)
    j0_mean = integrate(grid, current.j0) / area
    spatial_abs = _supnorm(curl_a + current.j0 - j0_mean)
    spatial_rel = spatial_abs / max(_supnorm(current.j0), field_scale, tiny)
    res = {
        "coulomb_abs": coulomb_abs,
        "coulomb_rel": coulomb_rel,
        "spatial_abs": spatial_abs,
        "spatial_rel": spatial_rel,
        "background": float(j0_mean),
    }
    if pot_prev is not None and dt is not None:
        if pot_next is not None:
            adot1 = (pot_next.a1 - pot_prev.a1) / (2.0 * dt)
            adot2 = (pot_next.a2 - pot_prev.a2) / (2.0 * dt)
        else:
            adot1 = (pot.a1 - pot_prev.a1) / dt
            adot2 = (pot.a2 - pot_prev.a2) / dt
        d1_a0 = spectral_derivative(grid, pot.a0, 1)
        d2_a0 = spectral_derivative(grid, pot.a0, 2)
        j1_mean = integrate(grid, current.j1) / area
        j2_mean = integrate(grid, current.j2) / area
        # f01 = adot1 - d1 a0 should equal j2 (mean-free part); f02 likewise -j1.
        r1 = _supnorm(adot1 - d1_a0 - (current.j2 - j2_mean))
        r2 = _supnorm(adot2 - d2_a0 + (current.j1 - j1_mean))
        scale1 = max(_supnorm(current.j2), field_scale, tiny)
        scale2 = max(_supnorm(current.j1), field_scale, tiny)
        res.update(
            temporal1_abs=r1,
            temporal2_abs=r2,
            temporal1_rel=r1 / scale1,
            temporal2_rel=r2 / scale2,
        )
    return ConstraintResiduals(**res)
