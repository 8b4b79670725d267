"""Periodic pseudospectral grid for the plane proxy.

Conventions, fixed across the package:

* The domain is the square torus [-L/2, L/2)^2 sampled at n x n points,
  ``x_i = -L/2 + i dx`` with ``dx = L/n``. Arrays are indexed ``values[i, j]
  = f(x1_i, x2_j)`` (axis 0 is x1, axis 1 is x2).
* Wavenumbers are ``k = 2 pi fftfreq(n, dx)``. Odd spectral derivatives zero
  the Nyquist mode on the derivative axis (the ik multiplier is odd; keeping
  the unpaired Nyquist mode would make derivatives of real fields complex).
* ``inverse_laplacian_zero_mean`` inverts with the -1/|k|^2 multiplier, drops
  the k = 0 mode, and returns the zero-mean solution. Sources must be
  (numerically) mean-free: a nonzero mean has no periodic solution.
* ``dealias`` applies the 2/3 rule: modes with integer index |m| > floor(n/3)
  on either axis are zeroed. Quadratic products of fields inside the retained
  band alias only into the discarded band, so dealiased products are exact
  for the retained modes.
* ``integrate`` is the rectangle rule, exact for band-limited integrands.
  Reduction goes through ``np.sum`` (fixed pairwise order), so results do not
  depend on how many worker processes a sweep uses.

Real input stays real through every operation here; complex input is
preserved as complex.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid2D",
    "make_grid",
    "spectral_derivative",
    "laplacian",
    "inverse_laplacian_zero_mean",
    "dealias",
    "integrate",
    "interpolate_column",
    "evaluate_at",
]

MEAN_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Precomputed spectral machinery for one (n, L) pair.

    Compares by identity: the package treats grids as shared immutable
    resources, and ndarray members make field-wise comparison meaningless.
    """

    n: int
    L: float
    dx: float = field(init=False)
    x1: np.ndarray = field(init=False, repr=False)
    x2: np.ndarray = field(init=False, repr=False)
    k: np.ndarray = field(init=False, repr=False)
    kr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.n < 32 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 32, got n={self.n}")
        if not self.L > 0:
            raise ValueError(f"domain size must be positive, got L={self.L}")
        dx = self.L / self.n
        x = -0.5 * self.L + dx * np.arange(self.n)
        k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=dx)
        kr = 2.0 * np.pi * np.fft.rfftfreq(self.n, d=dx)
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "x1", x)
        object.__setattr__(self, "x2", x.copy())
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "kr", kr)
        # ik multipliers with the Nyquist mode removed (odd operator).
        ik = 1j * k
        ik[self.n // 2] = 0.0
        ikr = 1j * kr.copy()
        ikr[-1] = 0.0
        object.__setattr__(self, "_ik", ik)
        object.__setattr__(self, "_ikr", ikr)
        k2_full = k[:, None] ** 2 + k[None, :] ** 2
        k2_half = k[:, None] ** 2 + kr[None, :] ** 2
        with np.errstate(divide="ignore"):
            inv_full = np.where(k2_full > 0.0, -1.0 / np.where(k2_full > 0, k2_full, 1.0), 0.0)
            inv_half = np.where(k2_half > 0.0, -1.0 / np.where(k2_half > 0, k2_half, 1.0), 0.0)
        object.__setattr__(self, "_k2_full", k2_full)
        object.__setattr__(self, "_k2_half", k2_half)
        object.__setattr__(self, "_invlap_full", inv_full)
        object.__setattr__(self, "_invlap_half", inv_half)
        m = np.rint(np.fft.fftfreq(self.n) * self.n).astype(np.int64)
        mr = np.arange(self.n // 2 + 1, dtype=np.int64)
        cut = self.n // 3
        keep = np.abs(m) <= cut
        keep_r = mr <= cut
        object.__setattr__(self, "_keep_full", keep[:, None] & keep[None, :])
        object.__setattr__(self, "_keep_half", keep[:, None] & keep_r[None, :])
        object.__setattr__(self, "dealias_cutoff", cut)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable coordinate planes (X1, X2)."""
        return self.x1[:, None], self.x2[None, :]

    def radius(self) -> np.ndarray:
        x1, x2 = self.mesh()
        return np.hypot(x1, x2)


def make_grid(n: int, L: float) -> Grid2D:
    return Grid2D(n=n, L=float(L))


def _check_shape(grid: Grid2D, values: np.ndarray) -> None:
    if values.shape != grid.shape:
        raise ValueError(f"field shape {values.shape} does not match grid {grid.shape}")


def spectral_derivative(grid: Grid2D, values: np.ndarray, axis: int) -> np.ndarray:
    """d/dx_axis with axis in {1, 2} (array axes 0 and 1)."""
    _check_shape(grid, values)
    if axis not in (1, 2):
        raise ValueError(f"axis must be 1 or 2, got {axis}")
    ax = axis - 1
    if np.iscomplexobj(values):
        fhat = np.fft.fft(values, axis=ax)
        mult = grid._ik[:, None] if ax == 0 else grid._ik[None, :]
        return np.fft.ifft(fhat * mult, axis=ax)
    fhat = np.fft.rfft(values, axis=ax)
    if ax == 0:
        # rfft along axis 0: wavenumbers are kr on that axis.
        mult = grid._ikr[:, None]
    else:
        mult = grid._ikr[None, :]
    return np.fft.irfft(fhat * mult, axis=ax, n=grid.n)


def laplacian(grid: Grid2D, values: np.ndarray) -> np.ndarray:
    _check_shape(grid, values)
    if np.iscomplexobj(values):
        return np.fft.ifft2(-grid._k2_full * np.fft.fft2(values))
    return np.fft.irfft2(-grid._k2_half * np.fft.rfft2(values), s=grid.shape)


def inverse_laplacian_zero_mean(grid: Grid2D, values: np.ndarray) -> np.ndarray:
    """Zero-mean solution u of lap(u) = f for a mean-free real source f."""
    _check_shape(grid, values)
    if np.iscomplexobj(values):
        raise ValueError("inverse laplacian expects a real source")
    total = integrate(grid, values)
    l2 = float(np.sqrt(max(integrate(grid, values * values), 0.0)))
    if abs(total) > MEAN_TOL * l2 * grid.L and l2 > 0.0:
        raise ValueError(
            "non-solvable source: periodic Poisson problem requires a mean-free "
            f"right-hand side (got integral {total:.3e} against tolerance "
            f"{MEAN_TOL * l2 * grid.L:.3e})"
        )
    fhat = np.fft.rfft2(values)
    return np.fft.irfft2(grid._invlap_half * fhat, s=grid.shape)


def dealias(grid: Grid2D, values: np.ndarray) -> np.ndarray:
    """Zero every mode with |m1| or |m2| above floor(n/3)."""
    _check_shape(grid, values)
    if np.iscomplexobj(values):
        fhat = np.fft.fft2(values)
        fhat[~grid._keep_full] = 0.0
        return np.fft.ifft2(fhat)
    fhat = np.fft.rfft2(values)
    fhat[~grid._keep_half] = 0.0
    return np.fft.irfft2(fhat, s=grid.shape)


def integrate(grid: Grid2D, values: np.ndarray) -> float | complex:
    _check_shape(grid, values)
    s = np.sum(values) * grid.dx**2
    return complex(s) if np.iscomplexobj(values) else float(s)


def _phase_row(grid: Grid2D, x: float) -> np.ndarray:
    """Evaluation weights for one off-grid coordinate.

    exp(i k (x - x_0)) per mode, with the Nyquist mode replaced by
    cos(k_nyq (x - x_0)); identical to the exponential at grid points, real
    off-grid for real fields.
    """
    shift = x - grid.x1[0]
    row = np.exp(1j * grid.k * shift)
    row[grid.n // 2] = np.cos(grid.k[grid.n // 2] * shift)
    return row / grid.n


def interpolate_column(grid: Grid2D, values: np.ndarray, x1: float) -> np.ndarray:
    """Band-limited evaluation of f(x1, .) on the x2 grid line."""
    _check_shape(grid, values)
    if not (grid.x1[0] - 0.5 * grid.dx <= x1 <= grid.x1[-1] + 0.5 * grid.dx):
        raise ValueError(f"x1={x1} outside the periodic fundamental domain")
    fhat = np.fft.fft(values, axis=0)
    col = _phase_row(grid, x1) @ fhat
    return col if np.iscomplexobj(values) else col.real


def evaluate_at(
    grid: Grid2D,
    values: np.ndarray | None,
    points: np.ndarray,
    spectrum: np.ndarray | None = None,
) -> np.ndarray:
    """Band-limited evaluation at arbitrary points, shape (P, 2).

    Pass ``spectrum=np.fft.fft2(values)`` to amortize the transform across
    repeated calls on the same field; ``values`` may then be None.
    """
    if spectrum is None:
        _check_shape(grid, values)
        spectrum = np.fft.fft2(values)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[-1] != 2:
        raise ValueError("points must have shape (P, 2)")
    e1 = np.empty((pts.shape[0], grid.n), dtype=np.complex128)
    e2 = np.empty_like(e1)
    for row, x in zip(e1, pts[:, 0]):
        row[:] = _phase_row(grid, x)
    for row, x in zip(e2, pts[:, 1]):
        row[:] = _phase_row(grid, x)
    return np.einsum("pm,mn,pn->p", e1, spectrum, e2, optimize=True)
