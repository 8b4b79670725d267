"""Pointwise field kernels, bound to the active lane at import time."""

from __future__ import annotations

from ._accel import NUMBA_ENABLED, active_lane

if NUMBA_ENABLED:
    from ._kernels_numba import (
        charge_density,
        covariant,
        energy_density,
        nonlinear_power,
        phi_rate,
        potential_density,
        psi_rate,
        spatial_current,
    )
else:
    from ._kernels_numpy import (
        charge_density,
        covariant,
        energy_density,
        nonlinear_power,
        phi_rate,
        potential_density,
        psi_rate,
        spatial_current,
    )

__all__ = [
    "active_lane",
    "charge_density",
    "covariant",
    "energy_density",
    "nonlinear_power",
    "phi_rate",
    "potential_density",
    "psi_rate",
    "spatial_current",
]
