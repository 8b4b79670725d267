"""Weighted energy identities: multiplier catalog, densities, and audits.

A multiplier is a spacetime vector field X plus a scalar weight chi. Pairing
the stress tensor with (X, chi) and integrating over a spacetime region gives
an identity

    boundary(t_b) - boundary(t_a) = -integral of bulk dt,

whose numerical residual is what the audits report. The curvature would add
a Lorentz-force term, but it vanishes identically here (see state module);
the audits still evaluate it to pin the sign conventions.

Two region types. Slab audits integrate over the whole box between two time
slices and work for multipliers whose weights are globally smooth. Half-space
audits integrate over {x1 >= t} or {x1 <= t}; their boundary terms are the
completed-square forms, and the moving null plane {x1 = t} contributes the
flux accumulators recorded in the diagnostics CSV during the run.

Weights here are polynomials (or powers of t - x1 + 1) that are not periodic;
the identities survive on the torus because the wraparound guard keeps the
fields supported away from the box edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .gauge import solve_gauge
from .grid import Grid2D, integrate, spectral_derivative
from .kernels import covariant, potential_density
from .runio import RunReader
from .state import (
    FieldState,
    GaugePotential,
    build_curvature_from_current,
    chern_simons_force_residual,
    compute_current,
)

__all__ = [
    "REGION_SLAB",
    "REGION_EXTERIOR",
    "REGION_INTERIOR",
    "MultiplierSpec",
    "catalog",
    "get_spec",
    "FieldSample",
    "prepare_sample",
    "stress_components",
    "boundary_density",
    "bulk_density",
    "generic_bulk_density",
    "deformation_fd_residual",
    "gauge_term_residual",
    "halfplane_weights",
    "halfplane_integral",
    "AuditReport",
    "audit_slab",
    "audit_halfspace",
]

REGION_SLAB = "slab"
REGION_EXTERIOR = "exterior_halfspace"
REGION_INTERIOR = "interior_halfspace"

# clip floor for powers of u = t - x1 + 1 outside the region of interest;
# clipped rows always carry zero quadrature weight
_U_FLOOR = 0.5


@dataclass(frozen=True)
class MultiplierSpec:
    """Coefficient functions of one multiplier.

    All callables take (t, x1, x2) with x1, x2 broadcastable arrays and
    return arrays of the broadcast shape. ``pi_comps`` returns the lowered
    symmetrized-gradient components (pi00, pi01, pi02, pi11, pi12, pi22)
    with the convention pi_{mu nu} = (d_mu X_nu + d_nu X_mu) / 2; None means
    identically zero (X is Killing). ``box_chi`` None means zero. The
    ``closed_bulk`` callable, when present, is the hand-reduced bulk density
    equal to the generic contraction on ``domain_ok`` points.
    """

    name: str
    region: str
    x_comps: Callable[..., tuple[np.ndarray, np.ndarray, np.ndarray]]
    chi: Callable[..., np.ndarray]
    dchi_dt: Callable[..., np.ndarray]
    pi_comps: Callable[..., tuple] | None
    closed_bulk: Callable[["FieldSample"], np.ndarray] | None
    box_chi: Callable[..., np.ndarray] | None = None
    domain_ok: Callable[[float, float, float], bool] | None = None


def _upow(u, e: float) -> np.ndarray:
    """u**e on u > 0, nan elsewhere (negative bases are out of domain)."""
    u = np.asarray(u, dtype=float)
    out = np.full(u.shape, np.nan)
    np.power(u, e, out=out, where=u > 0)
    return out


def catalog(p: float) -> list[MultiplierSpec]:
    q = 0.5 * (p - 1.0)

    def time_x(t, x1, x2):
        one = np.ones(np.broadcast_shapes(np.shape(x1), np.shape(x2)))
        return one, 0.0 * one, 0.0 * one

    def zero_scalar(t, x1, x2):
        return np.zeros(np.broadcast_shapes(np.shape(x1), np.shape(x2)))

    def ext_x(t, x1, x2, shift=0.0):
        w = t - x1
        return x2**2 + w**2 + shift, x2**2 - w**2, 2.0 * w * x2

    def ext_chi(t, x1, x2):
        return (t - x1) * np.ones_like(np.asarray(x2, dtype=float))

    def one_scalar(t, x1, x2):
        return np.ones(np.broadcast_shapes(np.shape(x1), np.shape(x2)))

    def ext_pi(t, x1, x2):
        w = (t - x1) * np.ones_like(np.asarray(x2, dtype=float))
        z = np.zeros_like(w)
        return -2.0 * w, z, z, 2.0 * w, z, 2.0 * w

    def ext_bulk(s: "FieldSample") -> np.ndarray:
        w = s.t - s.x1m
        return (s.p - 5.0) / (s.p + 1.0) * w * s.pdens

    def int_x(t, x1, x2):
        u = t - x1 + 1.0
        uq = _upow(u, q)
        uq2 = _upow(u, q - 2.0)
        uq1 = _upow(u, q - 1.0)
        return uq + uq2 * x2**2, -uq + uq2 * x2**2, 2.0 * uq1 * x2

    def int_chi(t, x1, x2):
        return _upow(t - x1 + 1.0, q - 1.0) * np.ones_like(np.asarray(x2, float))

    def int_dchi(t, x1, x2):
        return (q - 1.0) * _upow(t - x1 + 1.0, q - 2.0) * np.ones_like(
            np.asarray(x2, float)
        )

    def int_pi(t, x1, x2):
        u = t - x1 + 1.0
        uq1 = _upow(u, q - 1.0)
        uq2 = _upow(u, q - 2.0)
        uq3 = _upow(u, q - 3.0)
        x2sq = x2**2
        return (
            -q * uq1 - (q - 2.0) * uq3 * x2sq,
            (q - 2.0) * uq3 * x2sq,
            (q - 2.0) * uq2 * x2,
            q * uq1 - (q - 2.0) * uq3 * x2sq,
            -(q - 2.0) * uq2 * x2,
            2.0 * uq1 * np.ones_like(np.asarray(x2, float)),
        )

    def int_bulk(s: "FieldSample") -> np.ndarray:
        u = s.t - s.x1m + 1.0
        dl1 = s.psi + s.cd1
        return (
            (2.0 - q)
            * _upow(u, q - 3.0)
            * np.abs(s.x2m * dl1 + u * s.cd2) ** 2
        )

    def conf_x(t, x1, x2):
        return t * t + x1**2 + x2**2, 2.0 * t * x1, 2.0 * t * x2

    def conf_chi(t, x1, x2):
        return t * np.ones(np.broadcast_shapes(np.shape(x1), np.shape(x2)))

    def conf_pi(t, x1, x2):
        c = t * np.ones(np.broadcast_shapes(np.shape(x1), np.shape(x2)))
        z = np.zeros_like(c)
        return -2.0 * c, z, z, 2.0 * c, z, 2.0 * c

    def conf_bulk(s: "FieldSample") -> np.ndarray:
        return (s.p - 5.0) / (s.p + 1.0) * s.t * s.pdens

    def zeros_bulk(s: "FieldSample") -> np.ndarray:
        return np.zeros(s.grid.shape)

    def interior_domain(t, x1, x2):
        return t - x1 + 1.0 >= _U_FLOOR

    return [
        MultiplierSpec(
            name="time",
            region=REGION_SLAB,
            x_comps=time_x,
            chi=zero_scalar,
            dchi_dt=zero_scalar,
            pi_comps=None,
            closed_bulk=zeros_bulk,
        ),
        MultiplierSpec(
            name="exterior",
            region=REGION_EXTERIOR,
            x_comps=ext_x,
            chi=ext_chi,
            dchi_dt=one_scalar,
            pi_comps=ext_pi,
            closed_bulk=ext_bulk,
        ),
        MultiplierSpec(
            name="interior",
            region=REGION_INTERIOR,
            x_comps=int_x,
            chi=int_chi,
            dchi_dt=int_dchi,
            pi_comps=int_pi,
            closed_bulk=int_bulk,
            domain_ok=interior_domain,
        ),
        MultiplierSpec(
            name="conformal",
            region=REGION_SLAB,
            x_comps=conf_x,
            chi=conf_chi,
            dchi_dt=one_scalar,
            pi_comps=conf_pi,
            closed_bulk=conf_bulk,
        ),
        # time-shifted exterior weight: adds a pure energy multiplier on top
        # of "exterior", useful as a cross-check that audits are linear in X
        MultiplierSpec(
            name="exterior_shifted",
            region=REGION_EXTERIOR,
            x_comps=lambda t, x1, x2: ext_x(t, x1, x2, shift=1.0),
            chi=ext_chi,
            dchi_dt=one_scalar,
            pi_comps=ext_pi,
            closed_bulk=ext_bulk,
        ),
    ]


def get_spec(p: float, name: str) -> MultiplierSpec:
    for spec in catalog(p):
        if spec.name == name:
            return spec
    names = ", ".join(s.name for s in catalog(p))
    raise KeyError(f"unknown multiplier {name!r}; catalog has: {names}")


@dataclass(frozen=True)
class FieldSample:
    """One time slice with everything the densities need precomputed."""

    grid: Grid2D
    t: float
    p: float
    x1m: np.ndarray
    x2m: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    cd1: np.ndarray
    cd2: np.ndarray
    pdens: np.ndarray
    m_inner: np.ndarray


def prepare_sample(state: FieldState, pot: GaugePotential) -> FieldSample:
    grid = state.grid
    x1m, x2m = grid.mesh()
    cd1 = covariant(spectral_derivative(grid, state.phi, 1), pot.a1, state.phi)
    cd2 = covariant(spectral_derivative(grid, state.phi, 2), pot.a2, state.phi)
    m_inner = -np.abs(state.psi) ** 2 + np.abs(cd1) ** 2 + np.abs(cd2) ** 2
    return FieldSample(
        grid=grid,
        t=state.t,
        p=state.p,
        x1m=x1m,
        x2m=x2m,
        phi=state.phi,
        psi=state.psi,
        cd1=cd1,
        cd2=cd2,
        pdens=potential_density(state.phi, state.p),
        m_inner=m_inner,
    )


def stress_components(s: FieldSample) -> dict[str, np.ndarray]:
    """Lowered-index stress tensor on the slice."""
    lag = 0.5 * (s.m_inner + 2.0 / (s.p + 1.0) * s.pdens)
    return {
        "t00": 0.5
        * (np.abs(s.psi) ** 2 + np.abs(s.cd1) ** 2 + np.abs(s.cd2) ** 2)
        + s.pdens / (s.p + 1.0),
        "t01": (s.psi * np.conj(s.cd1)).real,
        "t02": (s.psi * np.conj(s.cd2)).real,
        "t11": np.abs(s.cd1) ** 2 - lag,
        "t12": (s.cd1 * np.conj(s.cd2)).real,
        "t22": np.abs(s.cd2) ** 2 - lag,
    }


def boundary_density(s: FieldSample, spec: MultiplierSpec) -> np.ndarray:
    """Constant-time boundary integrand T_{0 nu} X^nu - chi' |phi|^2/2 + chi <phi, psi>."""
    st = stress_components(s)
    x0, x1c, x2c = spec.x_comps(s.t, s.x1m, s.x2m)
    out = st["t00"] * x0 + st["t01"] * x1c + st["t02"] * x2c
    chi = spec.chi(s.t, s.x1m, s.x2m)
    dchi = spec.dchi_dt(s.t, s.x1m, s.x2m)
    aphi2 = np.abs(s.phi) ** 2
    out = out - 0.5 * dchi * aphi2 + chi * (s.phi * np.conj(s.psi)).real
    return out


def generic_bulk_density(s: FieldSample, spec: MultiplierSpec) -> np.ndarray:
    """Raised-stress contraction with pi plus the chi terms; no hand reduction."""
    chi = spec.chi(s.t, s.x1m, s.x2m)
    out = chi * (s.m_inner + s.pdens)
    if spec.pi_comps is not None:
        st = stress_components(s)
        pi00, pi01, pi02, pi11, pi12, pi22 = spec.pi_comps(s.t, s.x1m, s.x2m)
        out = out + (
            st["t00"] * pi00
            - 2.0 * (st["t01"] * pi01 + st["t02"] * pi02)
            + st["t11"] * pi11
            + 2.0 * st["t12"] * pi12
            + st["t22"] * pi22
        )
    if spec.box_chi is not None:
        out = out - 0.5 * spec.box_chi(s.t, s.x1m, s.x2m) * np.abs(s.phi) ** 2
    return out


def bulk_density(s: FieldSample, spec: MultiplierSpec) -> np.ndarray:
    if spec.closed_bulk is not None:
        return spec.closed_bulk(s)
    return generic_bulk_density(s, spec)


def deformation_fd_residual(
    spec: MultiplierSpec, points: np.ndarray, h: float = 1e-4
) -> float:
    """Max deviation of pi_comps from centered differences of the lowered X.

    ``points``: array of (t, x1, x2) rows. Self-consistency gate for catalog
    entries; skips nothing, a spec with pi_comps None is checked against 0.
    """
    worst = 0.0

    def lowered(t, x1, x2):
        x0, x1c, x2c = spec.x_comps(t, x1, x2)
        return np.array([-np.asarray(x0), np.asarray(x1c), np.asarray(x2c)], dtype=float)

    for t, x1, x2 in points:
        if spec.domain_ok is not None and not spec.domain_ok(t, x1, x2):
            continue
        coords = np.array([t, x1, x2])
        grad = np.zeros((3, 3))  # grad[mu, nu] = d_mu X_nu
        for mu in range(3):
            step = np.zeros(3)
            step[mu] = h
            cp = coords + step
            cm = coords - step
            grad[mu] = (lowered(*cp) - lowered(*cm)) / (2.0 * h)
        pi_fd = 0.5 * (grad + grad.T)
        if spec.pi_comps is None:
            pi_an = np.zeros((3, 3))
        else:
            pi00, pi01, pi02, pi11, pi12, pi22 = (
                float(np.asarray(v)) for v in spec.pi_comps(t, x1, x2)
            )
            pi_an = np.array(
                [[pi00, pi01, pi02], [pi01, pi11, pi12], [pi02, pi12, pi22]]
            )
        worst = max(worst, float(np.max(np.abs(pi_an - pi_fd))))
    return worst


def gauge_term_residual(
    state: FieldState, pot: GaugePotential, spec: MultiplierSpec
) -> tuple[float, float]:
    """(residual, scale) of the Lorentz-force term X^nu F_{gamma nu} J^gamma."""
    x1m, x2m = state.grid.mesh()
    current = compute_current(state, pot)
    curv = build_curvature_from_current(current)
    x0, x1c, x2c = spec.x_comps(state.t, x1m, x2m)
    if spec.domain_ok is not None:
        # X blows up outside its cone; the force vanishes pointwise, so
        # zeroing the excluded region changes nothing but avoids NaN.
        full = np.broadcast_shapes(x1m.shape, x2m.shape)
        ok = np.broadcast_to(spec.domain_ok(state.t, x1m, x2m), full)
        x0 = np.where(ok, x0, 0.0)
        x1c = np.where(ok, x1c, 0.0)
        x2c = np.where(ok, x2c, 0.0)
    return chern_simons_force_residual(current, curv, (x0, x1c, x2c))


def halfplane_weights(grid: Grid2D, tau: float, side: str) -> np.ndarray:
    """Per-row quadrature weights for {x1 >= tau} ("ge") or {x1 <= tau} ("le").

    Fractional weight in the cell straddling tau keeps the quadrature second
    order in dx without requiring tau on a grid node.
    """
    w = np.clip((grid.x1 + 0.5 * grid.dx - tau) / grid.dx, 0.0, 1.0)
    if side == "ge":
        return w
    if side == "le":
        return 1.0 - w
    raise ValueError(f"side must be 'ge' or 'le', got {side!r}")


def halfplane_integral(grid: Grid2D, dens: np.ndarray, tau: float, side: str) -> float:
    w = halfplane_weights(grid, tau, side)
    return float(np.dot(w, dens.sum(axis=1)) * grid.dx * grid.dx)


def _halfspace_boundary(s: FieldSample, tau: float, region: str, p: float) -> float:
    """Completed-square boundary integrals of the half-space identities."""
    dl1 = s.psi + s.cd1
    dl1b = s.psi - s.cd1
    d2x2phi = s.x2m * s.cd2 + s.phi
    if region == REGION_EXTERIOR:
        w = tau - s.x1m
        dens = (
            np.abs(s.x2m * dl1 + w * s.cd2) ** 2
            + np.abs(w * dl1b + d2x2phi) ** 2
            + 2.0 * (s.x2m**2 + w**2) / (p + 1.0) * s.pdens
        )
        return halfplane_integral(s.grid, dens, tau, "ge")
    u = np.maximum(tau - s.x1m + 1.0, _U_FLOOR)
    q = 0.5 * (p - 1.0)
    dens = u ** (q - 2.0) * (
        np.abs(s.x2m * dl1 + u * s.cd2) ** 2
        + np.abs(u * dl1b + d2x2phi) ** 2
        + 2.0 * (s.x2m**2 + u**2) / (p + 1.0) * s.pdens
    )
    return halfplane_integral(s.grid, dens, tau, "le")


def _halfspace_bulk_slice(s: FieldSample, region: str, p: float) -> float:
    """Bulk density integrated over the moving half-plane at the slice time."""
    if region == REGION_EXTERIOR:
        dens = (5.0 - p) / (p + 1.0) * (s.x1m - s.t) * s.pdens
        return halfplane_integral(s.grid, dens, s.t, "ge")
    q = 0.5 * (p - 1.0)
    u = np.maximum(s.t - s.x1m + 1.0, _U_FLOOR)
    dl1 = s.psi + s.cd1
    dens = (2.0 - q) * u ** (q - 3.0) * np.abs(s.x2m * dl1 + u * s.cd2) ** 2
    return halfplane_integral(s.grid, dens, s.t, "le")


def _halfplane_energy(s: FieldSample, tau: float) -> float:
    dens = (
        0.5 * (np.abs(s.psi) ** 2 + np.abs(s.cd1) ** 2 + np.abs(s.cd2) ** 2)
        + s.pdens / (s.p + 1.0)
    )
    return halfplane_integral(s.grid, dens, tau, "ge")


@dataclass(frozen=True)
class AuditReport:
    multiplier: str
    region: str
    t_a: float
    t_b: float
    boundary_a: float
    boundary_b: float
    null_term: float
    bulk_term: float
    residual: float
    scale: float
    relative_residual: float
    n_slices: int

    def to_json(self) -> dict[str, Any]:
        return {
            "multiplier": self.multiplier,
            "region": self.region,
            "window": [self.t_a, self.t_b],
            "boundary_a": self.boundary_a,
            "boundary_b": self.boundary_b,
            "null_term": self.null_term,
            "bulk_term": self.bulk_term,
            "residual": self.residual,
            "scale": self.scale,
            "relative_residual": self.relative_residual,
            "n_slices": self.n_slices,
        }


def _pot_for(reader: RunReader, state: FieldState) -> GaugePotential:
    if reader.config.flat:
        return GaugePotential.zero(state.grid)
    return solve_gauge(state)


def _window_indices(reader: RunReader, t_a: float, t_b: float) -> list[int]:
    times = reader.snapshot_times
    ia = int(np.argmin(np.abs(times - t_a)))
    ib = int(np.argmin(np.abs(times - t_b)))
    if ib <= ia:
        raise ValueError(f"audit window [{t_a}, {t_b}] holds fewer than two snapshots")
    return list(range(ia, ib + 1))


def audit_slab(
    reader: RunReader, spec: MultiplierSpec, t_a: float, t_b: float
) -> AuditReport:
    """Residual of the identity over the full box between two time slices.

    Boundary terms come from the endpoint snapshots; the bulk is a trapezoid
    over every snapshot in the window, so the window endpoints snap to the
    stored snapshot times nearest the request.
    """
    if spec.region != REGION_SLAB:
        raise ValueError(
            f"{spec.name!r} is a half-space multiplier; use audit_halfspace"
        )
    idx = _window_indices(reader, t_a, t_b)
    times = []
    bulks = []
    boundary_a = boundary_b = 0.0
    for j, i in enumerate(idx):
        state = reader.load_snapshot(i)
        sample = prepare_sample(state, _pot_for(reader, state))
        times.append(state.t)
        bulks.append(integrate(state.grid, bulk_density(sample, spec)))
        if j == 0:
            boundary_a = float(integrate(state.grid, boundary_density(sample, spec)))
        if j == len(idx) - 1:
            boundary_b = float(integrate(state.grid, boundary_density(sample, spec)))
    bulk_term = float(np.trapezoid(np.array(bulks), x=np.array(times)))
    residual = (boundary_b - boundary_a) + bulk_term
    scale = max(abs(boundary_a), abs(boundary_b), abs(bulk_term), 1e-30)
    return AuditReport(
        multiplier=spec.name,
        region=spec.region,
        t_a=times[0],
        t_b=times[-1],
        boundary_a=boundary_a,
        boundary_b=boundary_b,
        null_term=0.0,
        bulk_term=bulk_term,
        residual=float(residual),
        scale=float(scale),
        relative_residual=float(residual / scale),
        n_slices=len(idx),
    )


def _flux_at(reader: RunReader, column: str, t: float) -> float:
    diag = reader.diagnostics()
    times = diag["t"]
    i = int(np.argmin(np.abs(times - t)))
    if abs(times[i] - t) > 1e-9 * max(1.0, abs(t)):
        raise RuntimeError(
            f"no diagnostics row at t={t}; flux accumulators are sampled on the "
            "diagnostics cadence"
        )
    return float(diag[column][i])


def audit_halfspace(
    reader: RunReader, spec: MultiplierSpec, t_a: float, t_b: float
) -> AuditReport:
    """Residual of the completed-square identity over a moving half-space.

    Exterior ({x1 >= t}): boundary(t_a) = boundary(t_b) + 2*weighted null flux
    + 2*bulk, the flux being the x2^2-weighted accumulator from the run.
    Interior ({x1 <= t}): boundary(t_b) - boundary(t_a) = 2*cone flux -
    2*bulk. The shifted exterior variant adds twice the half-plane energy to
    the boundary and the unweighted null flux to the flux term.
    """
    if spec.region == REGION_SLAB:
        raise ValueError(f"{spec.name!r} is a slab multiplier; use audit_slab")
    if not reader.config.toggles.null_flux:
        raise RuntimeError(
            "run was recorded without null-plane accumulators; rerun with "
            "toggles.null_flux enabled to audit half-space identities"
        )
    idx = _window_indices(reader, t_a, t_b)
    p = reader.config.p
    times = []
    bulks = []
    boundary_a = boundary_b = 0.0
    for j, i in enumerate(idx):
        state = reader.load_snapshot(i)
        sample = prepare_sample(state, _pot_for(reader, state))
        times.append(state.t)
        bulks.append(_halfspace_bulk_slice(sample, spec.region, p))
        if j == 0 or j == len(idx) - 1:
            b = _halfspace_boundary(sample, state.t, spec.region, p)
            if spec.name == "exterior_shifted":
                b += 2.0 * _halfplane_energy(sample, state.t)
            if j == 0:
                boundary_a = b
            if j == len(idx) - 1:
                boundary_b = b
    ta, tb = times[0], times[-1]
    cutoff = reader.manifest.get("flux_cutoff_t")
    if cutoff is not None and tb > cutoff:
        raise RuntimeError(
            f"flux accumulation stopped at t={cutoff} (null plane reached the "
            f"box edge); audit window must end at or before that"
        )
    bulk_term = float(np.trapezoid(np.array(bulks), x=np.array(times)))
    if spec.region == REGION_EXTERIOR:
        null_term = 2.0 * (
            _flux_at(reader, "flux_null_weighted", tb)
            - _flux_at(reader, "flux_null_weighted", ta)
        )
        if spec.name == "exterior_shifted":
            null_term += _flux_at(reader, "flux_null", tb) - _flux_at(
                reader, "flux_null", ta
            )
        residual = boundary_a - boundary_b - null_term - 2.0 * bulk_term
    else:
        null_term = 2.0 * (
            _flux_at(reader, "flux_null_interior", tb)
            - _flux_at(reader, "flux_null_interior", ta)
        )
        residual = boundary_b - boundary_a - null_term + 2.0 * bulk_term
    scale = max(
        abs(boundary_a), abs(boundary_b), abs(null_term), 2.0 * abs(bulk_term), 1e-30
    )
    return AuditReport(
        multiplier=spec.name,
        region=spec.region,
        t_a=ta,
        t_b=tb,
        boundary_a=boundary_a,
        boundary_b=boundary_b,
        null_term=null_term,
        bulk_term=bulk_term,
        residual=float(residual),
        scale=float(scale),
        relative_residual=float(residual / scale),
        n_slices=len(idx),
    )
