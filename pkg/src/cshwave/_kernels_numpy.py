"""Vectorized numpy implementations of the pointwise field kernels."""

from __future__ import annotations

import numpy as np

__all__ = [
    "nonlinear_power",
    "charge_density",
    "spatial_current",
    "covariant",
    "phi_rate",
    "psi_rate",
    "energy_density",
    "potential_density",
]


def nonlinear_power(phi: np.ndarray, p: float) -> np.ndarray:
    # |phi|^(p-1) phi; p > 1 so the origin is regular.
    return np.abs(phi) ** (p - 1.0) * phi


def charge_density(phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return (phi * np.conj(psi)).imag


def spatial_current(phi, dphi, a):
    return (phi * np.conj(dphi)).imag - a * (phi.real**2 + phi.imag**2)


def covariant(dphi, a, phi):
    return dphi + 1j * (a * phi)


def phi_rate(psi, a0, phi):
    return psi - 1j * (a0 * phi)


def psi_rate(lap, d1, d2, phi, psi, a0, a1, a2, nonlin):
    adv = a1 * d1 + a2 * d2
    return lap + 2j * adv - (a1 * a1 + a2 * a2) * phi - nonlin - 1j * (a0 * psi)


def energy_density(psi, cd1, cd2, phi, p):
    mag2 = lambda z: z.real**2 + z.imag**2  # noqa: E731
    pot = np.abs(phi) ** (p + 1.0)
    return mag2(psi) + mag2(cd1) + mag2(cd2) + (2.0 / (p + 1.0)) * pot


def potential_density(phi, p):
    return np.abs(phi) ** (p + 1.0)
