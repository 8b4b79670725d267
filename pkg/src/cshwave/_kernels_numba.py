"""Jitted loop implementations of the pointwise field kernels.

Signatures mirror _kernels_numpy exactly; see that module for the reference
semantics. Loops are written element-wise so numba fuses each kernel into a
single pass with no temporaries.
"""

from __future__ import annotations

import numpy as np
from numba import njit

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

_opts = {"cache": True, "fastmath": False, "nogil": True}


@njit(**_opts)
def nonlinear_power(phi, p):
    out = np.empty_like(phi)
    f = phi.ravel()
    o = out.ravel()
    for i in range(f.size):
        o[i] = abs(f[i]) ** (p - 1.0) * f[i]
    return out


@njit(**_opts)
def charge_density(phi, psi):
    out = np.empty(phi.shape, dtype=np.float64)
    f = phi.ravel()
    g = psi.ravel()
    o = out.ravel()
    for i in range(f.size):
        o[i] = (f[i] * np.conj(g[i])).imag
    return out


@njit(**_opts)
def spatial_current(phi, dphi, a):
    out = np.empty(phi.shape, dtype=np.float64)
    f = phi.ravel()
    d = dphi.ravel()
    w = a.ravel()
    o = out.ravel()
    for i in range(f.size):
        z = f[i]
        o[i] = (z * np.conj(d[i])).imag - w[i] * (z.real * z.real + z.imag * z.imag)
    return out


@njit(**_opts)
def covariant(dphi, a, phi):
    out = np.empty_like(dphi)
    d = dphi.ravel()
    w = a.ravel()
    f = phi.ravel()
    o = out.ravel()
    for i in range(d.size):
        o[i] = d[i] + 1j * (w[i] * f[i])
    return out


@njit(**_opts)
def phi_rate(psi, a0, phi):
    out = np.empty_like(psi)
    g = psi.ravel()
    w = a0.ravel()
    f = phi.ravel()
    o = out.ravel()
    for i in range(g.size):
        o[i] = g[i] - 1j * (w[i] * f[i])
    return out


@njit(**_opts)
def psi_rate(lap, d1, d2, phi, psi, a0, a1, a2, nonlin):
    out = np.empty_like(lap)
    fl = lap.ravel()
    f1 = d1.ravel()
    f2 = d2.ravel()
    f = phi.ravel()
    g = psi.ravel()
    w0 = a0.ravel()
    w1 = a1.ravel()
    w2 = a2.ravel()
    nl = nonlin.ravel()
    o = out.ravel()
    for i in range(fl.size):
        adv = w1[i] * f1[i] + w2[i] * f2[i]
        o[i] = (
            fl[i]
            + 2j * adv
            - (w1[i] * w1[i] + w2[i] * w2[i]) * f[i]
            - nl[i]
            - 1j * (w0[i] * g[i])
        )
    return out


@njit(**_opts)
def energy_density(psi, cd1, cd2, phi, p):
    out = np.empty(phi.shape, dtype=np.float64)
    g = psi.ravel()
    c1 = cd1.ravel()
    c2 = cd2.ravel()
    f = phi.ravel()
    o = out.ravel()
    w = 2.0 / (p + 1.0)
    for i in range(f.size):
        m = (
            g[i].real * g[i].real
            + g[i].imag * g[i].imag
            + c1[i].real * c1[i].real
            + c1[i].imag * c1[i].imag
            + c2[i].real * c2[i].real
            + c2[i].imag * c2[i].imag
        )
        o[i] = m + w * abs(f[i]) ** (p + 1.0)
    return out


@njit(**_opts)
def potential_density(phi, p):
    out = np.empty(phi.shape, dtype=np.float64)
    f = phi.ravel()
    o = out.ravel()
    for i in range(f.size):
        o[i] = abs(f[i]) ** (p + 1.0)
    return out
