"""Initial data families, weighted energy norms, and exact grid symmetries.

Family profiles (d = |x - center|):

* ``gaussian``: a exp(-d^2 / sigma^2). Note sigma^2, not 2 sigma^2: with
  a = sigma = 1 this is exp(-|x|^2), the profile all worked constants in the
  test suite are frozen against.
* ``ring``: a exp(-(d - radius)^2 / sigma^2). Choose radius >~ 2.5 sigma so
  the radial kink at the origin sits below the dealiasing floor.
* ``bump``: a exp(1 - 1/(1 - d^2)) inside d < 1, exactly zero outside,
  normalized so the peak value is a.
* ``random``: seeded band-limited noise, modes |m| <= cutoff on both axes,
  rescaled to peak amplitude a. Not compactly supported; meant for property
  tests and the inequality harness, not decay runs.

Phase winding w multiplies by ((x1 + i x2) / s)^w (s = sigma or radius), which
keeps fields smooth at the origin. Velocity choices: "zero", "iphi"
(psi0 = i phi0), or "random" (random family only).

Built fields are dealiased so the evolved state starts inside the retained
band. The symmetry helpers (rotate90 / reflect_x1 / conjugate) are exact on
the grid: cell centers map to cell centers because x = -L/2 + i dx negates to
index (n - i) mod n.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .gauge import solve_gauge
from .grid import Grid2D, dealias, integrate, spectral_derivative
from .kernels import covariant, potential_density
from .state import FieldState

__all__ = [
    "InitialDataSpec",
    "build_data",
    "support_radius",
    "ENorms",
    "energy_norms",
    "rotate90",
    "reflect_x1",
]

Family = Literal["gaussian", "ring", "bump", "random"]


@dataclass(frozen=True)
class InitialDataSpec:
    family: str = "gaussian"
    amplitude: float = 1.0
    sigma: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)
    winding: int = 0
    velocity: str = "zero"
    radius: float = 2.0
    cutoff: int = 8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.family not in ("gaussian", "ring", "bump", "random"):
            raise ValueError(f"unknown data family {self.family!r}")
        if self.family != "random" and self.velocity not in ("zero", "iphi"):
            raise ValueError(f"velocity {self.velocity!r} invalid for {self.family}")
        if self.family == "random" and self.velocity not in ("zero", "iphi", "random"):
            raise ValueError(f"velocity {self.velocity!r} invalid for random family")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.winding < 0:
            raise ValueError("winding must be a nonnegative integer")


def _winding_factor(x1: np.ndarray, x2: np.ndarray, w: int, scale: float) -> np.ndarray:
    if w == 0:
        return np.ones(np.broadcast_shapes(x1.shape, x2.shape), dtype=np.complex128)
    return ((x1 + 1j * x2) / scale) ** w


def build_data(grid: Grid2D, spec: InitialDataSpec) -> tuple[np.ndarray, np.ndarray]:
    """(phi0, psi0) on the grid, dealiased complex128."""
    x1, x2 = grid.mesh()
    cx, cy = spec.center
    y1 = x1 - cx
    y2 = x2 - cy
    d2 = y1**2 + y2**2
    if spec.family == "gaussian":
        prof = spec.amplitude * np.exp(-d2 / spec.sigma**2)
        phi0 = prof * _winding_factor(y1, y2, spec.winding, spec.sigma)
    elif spec.family == "ring":
        d = np.sqrt(d2)
        prof = spec.amplitude * np.exp(-((d - spec.radius) ** 2) / spec.sigma**2)
        phi0 = prof * _winding_factor(y1, y2, spec.winding, spec.radius)
    elif spec.family == "bump":
        inside = d2 < 1.0
        prof = np.zeros(grid.shape)
        with np.errstate(divide="ignore", over="ignore"):
            arg = np.where(inside, 1.0 - 1.0 / np.where(inside, 1.0 - d2, 1.0), -np.inf)
        prof[inside] = spec.amplitude * np.exp(arg[inside])
        phi0 = prof * _winding_factor(y1, y2, spec.winding, 1.0)
    else:
        phi0, psi0 = _random_pair(grid, spec)
        phi0 = dealias(grid, phi0)
        psi0 = dealias(grid, psi0)
        return phi0.astype(np.complex128), psi0.astype(np.complex128)

    phi0 = phi0.astype(np.complex128)
    if spec.velocity == "zero":
        psi0 = np.zeros(grid.shape, dtype=np.complex128)
    else:
        psi0 = 1j * phi0
    return dealias(grid, phi0), dealias(grid, psi0)


def _random_pair(grid: Grid2D, spec: InitialDataSpec) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(spec.seed)
    m = np.rint(np.fft.fftfreq(grid.n) * grid.n).astype(int)
    keep = (np.abs(m)[:, None] <= spec.cutoff) & (np.abs(m)[None, :] <= spec.cutoff)

    def draw() -> np.ndarray:
        coef = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        coef[~keep] = 0.0
        f = np.fft.ifft2(coef)
        peak = np.max(np.abs(f))
        return spec.amplitude * f / peak if peak > 0 else f

    phi0 = draw()
    if spec.velocity == "zero":
        psi0 = np.zeros(grid.shape, dtype=np.complex128)
    elif spec.velocity == "iphi":
        psi0 = 1j * phi0
    else:
        psi0 = draw()
    return phi0, psi0


def support_radius(spec: InitialDataSpec) -> float:
    """Effective support radius (field below ~1e-12 of peak outside)."""
    off = float(np.hypot(*spec.center))
    tail = spec.sigma * (np.sqrt(12.0 * np.log(10.0)) + 0.5 * np.sqrt(spec.winding))
    if spec.family == "gaussian":
        return off + tail
    if spec.family == "ring":
        return off + spec.radius + tail
    if spec.family == "bump":
        return off + 1.0
    return 0.0


@dataclass(frozen=True)
class ENorms:
    """Weighted data norms: plain (e00), weight-(1+|x|)^2 (e02), one extra
    covariant derivative at weight 2l (e10). Potential enters unweighted by
    the exponent-dependent factor: the |phi0|^{p+1} term carries coefficient
    one."""

    e00: float
    e02: float
    e10: float


def energy_norms(grid: Grid2D, phi0: np.ndarray, psi0: np.ndarray, p: float) -> ENorms:
    state = FieldState(grid=grid, t=0.0, p=p, phi=phi0, psi=psi0)
    pot = solve_gauge(state)
    cd1 = covariant(spectral_derivative(grid, phi0, 1), pot.a1, phi0)
    cd2 = covariant(spectral_derivative(grid, phi0, 2), pot.a2, phi0)
    first = np.abs(cd1) ** 2 + np.abs(cd2) ** 2 + np.abs(psi0) ** 2
    potn = potential_density(phi0, p)
    r = grid.radius()
    w2 = (1.0 + r) ** 2
    e00 = integrate(grid, first) + integrate(grid, potn)
    e02 = integrate(grid, w2 * first) + integrate(grid, w2 * potn)
    second = np.zeros(grid.shape)
    for ck in (cd1, cd2):
        for axis, a_comp in ((1, pot.a1), (2, pot.a2)):
            dd = covariant(spectral_derivative(grid, ck, axis), a_comp, ck)
            second += np.abs(dd) ** 2
    for axis, a_comp in ((1, pot.a1), (2, pot.a2)):
        dpsi = covariant(spectral_derivative(grid, psi0, axis), a_comp, psi0)
        second += np.abs(dpsi) ** 2
    e10 = e00 + integrate(grid, w2 * second)
    return ENorms(e00=float(e00), e02=float(e02), e10=float(e10))


def rotate90(values: np.ndarray) -> np.ndarray:
    """Pullback under rotation by +90 degrees: out(x) = in(x2, -x1)."""
    n = values.shape[0]
    neg = (n - np.arange(n)) % n
    return values.T[neg, :].copy()


def reflect_x1(values: np.ndarray) -> np.ndarray:
    """Pullback under x1 -> -x1."""
    n = values.shape[0]
    neg = (n - np.arange(n)) % n
    return values[neg, :].copy()
