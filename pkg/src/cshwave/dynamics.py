"""Classical RK4 evolution of the gauged wave system.

The state advances as a first-order system in (phi, psi). Every stage
re-solves the elliptic gauge chain from the stage fields, so the potential
is always slaved, never integrated. Both rate arrays are dealiased per
stage; initial data is dealiased at build time, so states stay band-limited
for the whole run.

The step is fixed: dt divides t_final exactly, chosen as close to cfl*dx
as possible from below. There is no adaptivity; a run that needs it is a
run whose box or resolution is wrong.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Any, Callable

import numpy as np

from .config import RunConfig
from .diagnostics import FluxAccumulators, advance_flux, compute_record, total_charge
from .gauge import (
    potentials_from_charge_density,
    solve_gauge,
    temporal_potential_from_currents,
)
from .grid import Grid2D, dealias, make_grid
from .initdata import build_data
from .kernels import (
    charge_density,
    nonlinear_power,
    phi_rate,
    psi_rate,
    spatial_current,
)
from .runio import RunWriter
from .state import FieldState, GaugePotential

__all__ = ["BlowupError", "evolution_rates", "rk4_step", "run", "RunResult"]


class BlowupError(RuntimeError):
    """Field amplitude left the trusted range; the run stopped early."""

    def __init__(self, t: float, sup: float, threshold: float):
        self.t = t
        self.sup = sup
        self.threshold = threshold
        super().__init__(
            f"sup|phi| = {sup:.6g} exceeded {threshold:.6g} at t = {t:.6g}; "
            "halting before the spectral representation degrades"
        )


def _rates(
    grid: Grid2D, p: float, phi: np.ndarray, psi: np.ndarray, flat: bool
) -> tuple[np.ndarray, np.ndarray, GaugePotential]:
    phi_hat = np.fft.fft2(phi)
    dphi1 = np.fft.ifft2(phi_hat * grid._ik[:, None])
    dphi2 = np.fft.ifft2(phi_hat * grid._ik[None, :])
    lap = np.fft.ifft2(phi_hat * (-grid._k2_full))
    if flat:
        pot = GaugePotential.zero(grid)
    else:
        j0 = charge_density(phi, psi)
        a1, a2 = potentials_from_charge_density(grid, j0)
        j1 = spatial_current(phi, dphi1, a1)
        j2 = spatial_current(phi, dphi2, a2)
        a0 = temporal_potential_from_currents(grid, j1, j2)
        pot = GaugePotential(a0=a0, a1=a1, a2=a2)
    nl = nonlinear_power(phi, p)
    dphi = dealias(grid, phi_rate(psi, pot.a0, phi))
    dpsi = dealias(
        grid, psi_rate(lap, dphi1, dphi2, phi, psi, pot.a0, pot.a1, pot.a2, nl)
    )
    return dphi, dpsi, pot


def evolution_rates(
    state: FieldState, flat: bool = False
) -> tuple[np.ndarray, np.ndarray, GaugePotential]:
    """(d phi/dt, d psi/dt, potential) at the given state."""
    return _rates(state.grid, state.p, state.phi, state.psi, flat)


def rk4_step(state: FieldState, dt: float, flat: bool = False) -> FieldState:
    grid, p = state.grid, state.p
    phi, psi = state.phi, state.psi
    k1p, k1s, _ = _rates(grid, p, phi, psi, flat)
    k2p, k2s, _ = _rates(grid, p, phi + 0.5 * dt * k1p, psi + 0.5 * dt * k1s, flat)
    k3p, k3s, _ = _rates(grid, p, phi + 0.5 * dt * k2p, psi + 0.5 * dt * k2s, flat)
    k4p, k4s, _ = _rates(grid, p, phi + dt * k3p, psi + dt * k3s, flat)
    sixth = dt / 6.0
    return FieldState(
        grid=grid,
        t=state.t + dt,
        p=p,
        phi=phi + sixth * (k1p + 2.0 * (k2p + k3p) + k4p),
        psi=psi + sixth * (k1s + 2.0 * (k2s + k3s) + k4s),
    )


def choose_step(grid: Grid2D, cfl: float, t_final: float) -> tuple[float, int]:
    """Largest dt <= cfl*dx that divides t_final into whole steps."""
    base = cfl * grid.dx
    n_steps = max(1, math.ceil(t_final / base - 1e-9))
    return t_final / n_steps, n_steps


@dataclass
class RunResult:
    out_dir: str
    manifest: dict[str, Any]
    final_state: FieldState
    dt: float
    n_steps: int


def run(
    config: RunConfig,
    out_dir: str,
    blowup_factor: float = 1e3,
    progress: Callable[[int, int, float], None] | None = None,
) -> RunResult:
    """Evolve the configured data, writing the run directory as it goes.

    Raises BlowupError after finalizing a failed manifest, so a partial run
    on disk is still self-describing.
    """
    t_start = time.perf_counter()
    grid = make_grid(config.n, config.L)
    phi0, psi0 = build_data(grid, config.data)
    state = FieldState(grid=grid, t=0.0, p=config.p, phi=phi0, psi=psi0)
    dt, n_steps = choose_step(grid, config.cfl, config.t_final)
    writer = RunWriter(out_dir, config, dt, n_steps)

    sup0 = float(np.abs(phi0).max())
    threshold = blowup_factor * max(1.0, sup0)
    background = 0.0 if config.flat else total_charge(state) / (config.L**2)

    flux_on = config.toggles.null_flux
    pot_every_step = flux_on or config.flat or config.diag_every == 1
    acc = FluxAccumulators()

    def potential_at(s: FieldState) -> GaugePotential:
        return GaugePotential.zero(grid) if config.flat else solve_gauge(s)

    def emit_record(s, pot, pot_prev):
        rec = compute_record(
            s,
            pot,
            acc,
            pot_prev=pot_prev,
            dt=dt,
            second_order=config.toggles.second_order,
        )
        nan = float("nan")
        if config.flat:
            rec = replace(
                rec, res_coulomb=nan, res_gauss=nan, res_fdot1=nan, res_fdot2=nan
            )
        if not flux_on:
            # a zero here would read as a measured flux; blank it instead
            rec = replace(
                rec, flux_null=nan, flux_null_weighted=nan, flux_null_interior=nan
            )
        writer.add_record(rec)

    pot = potential_at(state)
    if flux_on:
        advance_flux(acc, state, pot)
    emit_record(state, pot, None)
    writer.add_snapshot(0, state)
    pot_prev: GaugePotential | None = pot

    try:
        for k in range(1, n_steps + 1):
            state = rk4_step(state, dt, config.flat)
            # k*dt, not accumulated addition: sample times stay exact
            state = replace(state, t=k * dt)
            sup = float(np.abs(state.phi).max())
            if not np.isfinite(sup) or sup > threshold:
                raise BlowupError(state.t, sup, threshold)

            diag_due = k % config.diag_every == 0 or k == n_steps
            pot_new: GaugePotential | None = None
            if pot_every_step or diag_due:
                pot_new = potential_at(state)
            if flux_on:
                advance_flux(acc, state, pot_new)
            if diag_due:
                emit_record(state, pot_new, pot_prev)
                if progress is not None:
                    progress(k, n_steps, state.t)
            if k % config.snapshot_every == 0 or k == n_steps:
                writer.add_snapshot(k, state)
            pot_prev = pot_new
    except BlowupError as exc:
        manifest = writer.finalize(
            status="failed",
            wall_seconds=time.perf_counter() - t_start,
            flux_cutoff_t=acc.cutoff_t,
            background=background,
            fail_reason=str(exc),
        )
        raise

    manifest = writer.finalize(
        status="completed",
        wall_seconds=time.perf_counter() - t_start,
        flux_cutoff_t=acc.cutoff_t,
        background=background,
    )
    return RunResult(
        out_dir=out_dir,
        manifest=manifest,
        final_state=state,
        dt=dt,
        n_steps=n_steps,
    )
