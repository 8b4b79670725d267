"""Per-sample scalar diagnostics and the null-plane flux accumulators.

Everything here is a pure function of (state, potential) except the flux
accumulators, which trapezoid the moving-plane integrands between accepted
steps. The diagnostics CSV schema is frozen in COLUMNS / SCHEMA_DOC; the
writer in runio emits one row per sample in that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .gauge import constraint_residuals, solve_gauge
from .grid import Grid2D, integrate, interpolate_column, spectral_derivative
from .kernels import covariant, energy_density, charge_density, potential_density
from .state import FieldState, GaugePotential

__all__ = [
    "COLUMNS",
    "SCHEMA_DOC",
    "DiagnosticsRecord",
    "FluxAccumulators",
    "standard_energy",
    "total_charge",
    "potential_integral",
    "weighted_potential",
    "conformal_charge",
    "second_order_energy",
    "first_order_weighted",
    "flux_integrands",
    "advance_flux",
    "compute_record",
    "decay_weight_exponent",
]


def decay_weight_exponent(p: float) -> float:
    return min((p - 1.0) / 2.0, 2.0)


def _cov_pair(state: FieldState, pot: GaugePotential):
    grid = state.grid
    cd1 = covariant(spectral_derivative(grid, state.phi, 1), pot.a1, state.phi)
    cd2 = covariant(spectral_derivative(grid, state.phi, 2), pot.a2, state.phi)
    return cd1, cd2


def standard_energy(state: FieldState, pot: GaugePotential) -> float:
    cd1, cd2 = _cov_pair(state, pot)
    dens = energy_density(state.psi, cd1, cd2, state.phi, state.p)
    return float(integrate(state.grid, dens))


def total_charge(state: FieldState) -> float:
    return float(integrate(state.grid, charge_density(state.phi, state.psi)))


def potential_integral(state: FieldState) -> float:
    return float(integrate(state.grid, potential_density(state.phi, state.p)))


def weighted_potential(state: FieldState) -> float:
    r = state.grid.radius()
    w = (1.0 + state.t + r) ** decay_weight_exponent(state.p)
    return float(integrate(state.grid, w * potential_density(state.phi, state.p)))


def conformal_charge(
    state: FieldState, pot: GaugePotential, parts: bool = False
):
    """Conformal-multiplier boundary charge at constant time.

    Sum of four complete squares (scaling, two boosts, angular) plus the
    (t^2 + r^2)-weighted potential; conserved for p = 5, monotone under the
    sign of (p - 5) otherwise.
    """
    grid = state.grid
    t = state.t
    x1, x2 = grid.mesh()
    cd1, cd2 = _cov_pair(state, pot)
    psi = state.psi
    phi = state.phi
    q_scaling = 0.5 * integrate(
        grid, np.abs(t * psi + x1 * cd1 + x2 * cd2 + phi) ** 2
    )
    q_boost1 = 0.5 * integrate(grid, np.abs(t * cd1 + x1 * psi) ** 2)
    q_boost2 = 0.5 * integrate(grid, np.abs(t * cd2 + x2 * psi) ** 2)
    q_angular = 0.5 * integrate(grid, np.abs(x1 * cd2 - x2 * cd1) ** 2)
    r2 = x1**2 + x2**2
    conf_pot = integrate(
        grid, ((t * t + r2) / (state.p + 1.0)) * potential_density(phi, state.p)
    )
    total = float(q_scaling + q_boost1 + q_boost2 + q_angular + conf_pot)
    if parts:
        return total, {
            "scaling": float(q_scaling),
            "boost1": float(q_boost1),
            "boost2": float(q_boost2),
            "angular": float(q_angular),
            "potential": float(conf_pot),
        }
    return total


def second_order_energy(state: FieldState, pot: GaugePotential) -> float:
    """Root-sum-square of the L2 norms of D_j D_k phi and D_j psi."""
    grid = state.grid
    cd1, cd2 = _cov_pair(state, pot)
    acc = 0.0
    for ck in (cd1, cd2):
        for axis, a_comp in ((1, pot.a1), (2, pot.a2)):
            dd = covariant(spectral_derivative(grid, ck, axis), a_comp, ck)
            acc += integrate(grid, np.abs(dd) ** 2)
    for axis, a_comp in ((1, pot.a1), (2, pot.a2)):
        dpsi = covariant(spectral_derivative(grid, state.psi, axis), a_comp, state.psi)
        acc += integrate(grid, np.abs(dpsi) ** 2)
    return float(np.sqrt(acc))


def first_order_weighted(state: FieldState, pot: GaugePotential):
    """(w1, w2, l2): |t-r|-weighted gradient, angular, and plain L2 norms."""
    grid = state.grid
    x1, x2 = grid.mesh()
    r = grid.radius()
    cd1, cd2 = _cov_pair(state, pot)
    grad2 = np.abs(cd1) ** 2 + np.abs(cd2) ** 2
    w1 = np.sqrt(integrate(grid, (1.0 + np.abs(state.t - r)) ** 2 * grad2))
    ang = np.abs(x1 * cd2 - x2 * cd1) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        ang_over_r2 = np.where(r > 0.0, ang / np.where(r > 0.0, r * r, 1.0), 0.0)
    w2 = (1.0 + state.t) * np.sqrt(integrate(grid, ang_over_r2))
    l2 = np.sqrt(integrate(grid, np.abs(state.phi) ** 2))
    return float(w1), float(w2), float(l2)


@dataclass
class FluxAccumulators:
    """Running time integrals over the moving null plane x1 = t.

    ``null``      : |D_(dt+d1) phi|^2 + |D_2 phi|^2 + 2/(p+1)|phi|^{p+1}
    ``weighted``  : x2^2 |D_(dt+d1) phi|^2
    ``interior``  : |x2 D_(dt+d1) phi + D_2 phi|^2 + 2/(p+1)|phi|^{p+1}

    Trapezoid between consecutive accepted steps; accumulation stops (cutoff
    recorded) once the plane reaches within one cell of the domain edge.
    """

    null: float = 0.0
    weighted: float = 0.0
    interior: float = 0.0
    cutoff_t: float | None = None
    _prev: tuple[float, float, float] | None = field(default=None, repr=False)
    _prev_t: float | None = field(default=None, repr=False)


def flux_integrands(state: FieldState, pot: GaugePotential) -> tuple[float, float, float]:
    """x2-line integrals of the three flux densities at x1 = t."""
    grid = state.grid
    cd1, cd2 = _cov_pair(state, pot)
    phi_c = interpolate_column(grid, state.phi, state.t)
    psi_c = interpolate_column(grid, state.psi, state.t)
    d1_c = interpolate_column(grid, cd1, state.t)
    d2_c = interpolate_column(grid, cd2, state.t)
    dl1 = psi_c + d1_c
    x2 = grid.x2
    pot_c = (2.0 / (state.p + 1.0)) * np.abs(phi_c) ** (state.p + 1.0)
    i_null = np.sum(np.abs(dl1) ** 2 + np.abs(d2_c) ** 2 + pot_c) * grid.dx
    i_weighted = np.sum(x2**2 * np.abs(dl1) ** 2) * grid.dx
    i_interior = np.sum(np.abs(x2 * dl1 + d2_c) ** 2 + pot_c) * grid.dx
    return float(i_null), float(i_weighted), float(i_interior)


def advance_flux(acc: FluxAccumulators, state: FieldState, pot: GaugePotential) -> None:
    """Push one accepted step into the accumulators."""
    if acc.cutoff_t is not None:
        return
    if state.t > 0.5 * state.grid.L - state.grid.dx:
        acc.cutoff_t = state.t
        return
    vals = flux_integrands(state, pot)
    if acc._prev is not None:
        h = state.t - acc._prev_t
        acc.null += 0.5 * h * (acc._prev[0] + vals[0])
        acc.weighted += 0.5 * h * (acc._prev[1] + vals[1])
        acc.interior += 0.5 * h * (acc._prev[2] + vals[2])
    acc._prev = vals
    acc._prev_t = state.t


COLUMNS = [
    "t",
    "energy",
    "charge",
    "potential",
    "weighted_potential",
    "conf_total",
    "conf_q_scaling",
    "conf_q_boost1",
    "conf_q_boost2",
    "conf_q_angular",
    "conf_pot",
    "sup_phi",
    "sup_phi_inner",
    "sup_phi_weighted",
    "second_energy",
    "w1",
    "w2",
    "l2_phi",
    "flux_null",
    "flux_null_weighted",
    "flux_null_interior",
    "res_coulomb",
    "res_gauss",
    "res_fdot1",
    "res_fdot2",
]

SCHEMA_DOC = {
    "t": "sample time",
    "energy": "integral of |psi|^2 + |D1 phi|^2 + |D2 phi|^2 + 2/(p+1)|phi|^{p+1}",
    "charge": "integral of Im(phi conj(psi)); conserved",
    "potential": "integral of |phi|^{p+1}",
    "weighted_potential": "integral of (1+t+r)^{min((p-1)/2,2)} |phi|^{p+1}",
    "conf_total": "conformal charge: four squares plus (t^2+r^2)-weighted potential",
    "conf_q_scaling": "1/2 || t psi + x.Dphi + phi ||_L2^2",
    "conf_q_boost1": "1/2 || t D1 phi + x1 psi ||_L2^2",
    "conf_q_boost2": "1/2 || t D2 phi + x2 psi ||_L2^2",
    "conf_q_angular": "1/2 || x1 D2 phi - x2 D1 phi ||_L2^2",
    "conf_pot": "integral of (t^2+r^2)/(p+1) |phi|^{p+1}",
    "sup_phi": "max |phi| over the grid",
    "sup_phi_inner": "max |phi| over r <= t/2 (0 when empty)",
    "sup_phi_weighted": "max (1+t+r)^{1/2} |phi|",
    "second_energy": "sqrt(sum ||D_j D_k phi||^2 + sum ||D_j psi||^2)",
    "w1": "|| (1+|t-r|) (D1 phi, D2 phi) ||_L2",
    "w2": "(1+t) || (x1 D2 phi - x2 D1 phi)/r ||_L2 (0 at r=0)",
    "l2_phi": "|| phi ||_L2",
    "flux_null": "accumulated null-plane flux of |D_+ phi|^2+|D2 phi|^2+2/(p+1)|phi|^{p+1}",
    "flux_null_weighted": "accumulated null-plane flux of x2^2 |D_+ phi|^2",
    "flux_null_interior": "accumulated null-plane flux of |x2 D_+ phi + D2 phi|^2 + 2/(p+1)|phi|^{p+1}",
    "res_coulomb": "||div a||_inf / (1 + ||a1||_inf + ||a2||_inf)",
    "res_gauss": "||curl a + j0 - mean(j0)||_inf / ||j0||_inf",
    "res_fdot1": "one-sided ||da1/dt - d1 a0 - (j2 - mean j2)||_inf / ||j2||_inf (nan before first step)",
    "res_fdot2": "one-sided ||da2/dt - d2 a0 + (j1 - mean j1)||_inf / ||j1||_inf (nan before first step)",
}


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    energy: float
    charge: float
    potential: float
    weighted_potential: float
    conf_total: float
    conf_q_scaling: float
    conf_q_boost1: float
    conf_q_boost2: float
    conf_q_angular: float
    conf_pot: float
    sup_phi: float
    sup_phi_inner: float
    sup_phi_weighted: float
    second_energy: float
    w1: float
    w2: float
    l2_phi: float
    flux_null: float
    flux_null_weighted: float
    flux_null_interior: float
    res_coulomb: float
    res_gauss: float
    res_fdot1: float
    res_fdot2: float

    def row(self) -> list[float]:
        return [getattr(self, f.name) for f in fields(self)]


def compute_record(
    state: FieldState,
    pot: GaugePotential,
    acc: FluxAccumulators,
    pot_prev: GaugePotential | None = None,
    dt: float | None = None,
    second_order: bool = True,
) -> DiagnosticsRecord:
    grid = state.grid
    r = grid.radius()
    absphi = np.abs(state.phi)
    conf_total, parts = conformal_charge(state, pot, parts=True)
    res = constraint_residuals(state, pot, pot_prev=pot_prev, dt=dt)
    w1, w2, l2 = first_order_weighted(state, pot)
    inner = r <= 0.5 * state.t
    sup_inner = float(absphi[inner].max()) if np.any(inner) else 0.0
    return DiagnosticsRecord(
        t=state.t,
        energy=standard_energy(state, pot),
        charge=total_charge(state),
        potential=potential_integral(state),
        weighted_potential=weighted_potential(state),
        conf_total=conf_total,
        conf_q_scaling=parts["scaling"],
        conf_q_boost1=parts["boost1"],
        conf_q_boost2=parts["boost2"],
        conf_q_angular=parts["angular"],
        conf_pot=parts["potential"],
        sup_phi=float(absphi.max()),
        sup_phi_inner=sup_inner,
        sup_phi_weighted=float((np.sqrt(1.0 + state.t + r) * absphi).max()),
        second_energy=(
            second_order_energy(state, pot) if second_order else float("nan")
        ),
        w1=w1,
        w2=w2,
        l2_phi=l2,
        flux_null=acc.null,
        flux_null_weighted=acc.weighted,
        flux_null_interior=acc.interior,
        res_coulomb=res.coulomb_rel,
        res_gauss=res.spatial_rel,
        res_fdot1=res.temporal1_rel if res.temporal1_rel is not None else float("nan"),
        res_fdot2=res.temporal2_rel if res.temporal2_rel is not None else float("nan"),
    )
