"""Post-hoc analysis helpers: decay-rate fits, sup-constant bounds, and the
borderline sup-norm interpolation inequality used to sanity-check bootstrap
constants.

Everything here consumes plain arrays (usually columns pulled out of a run's
diagnostics table) so it can be exercised against closed-form series in tests
without touching any solver machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid2D

MODEL_POWER = "pure_power"
MODEL_POWER_SQRTLOG = "power_with_sqrt_log"
_MODELS = (MODEL_POWER, MODEL_POWER_SQRTLOG)

MIN_FIT_SAMPLES = 8

# Sharp constant in the 2d sup-norm interpolation bound.
SOBOLEV_CONSTANT = 3.0 * math.sqrt(3.0) / (2.0 * math.pi)


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of a time series against a decay/growth model.

    ``exponent`` is the power of (1+t); ``intercept`` is the fitted constant
    in log space (see ``amplitude`` for the multiplicative form).
    """

    exponent: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    model: str
    n_samples: int

    @property
    def amplitude(self) -> float:
        return float(math.exp(self.intercept))


def _window_mask(times: np.ndarray, window: tuple[float, float] | None) -> np.ndarray:
    if window is None:
        return np.ones(times.shape, dtype=bool)
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise ValueError(f"empty fit window [{lo}, {hi}]")
    return (times >= lo) & (times <= hi)


def fit_rate(
    times,
    values,
    model: str = MODEL_POWER,
    window: tuple[float, float] | None = None,
) -> RateFit:
    """Fit ``values ~ C * (1+t)^a`` (optionally times sqrt(log(2+t))).

    The fit is ordinary least squares in log-log coordinates.  For the
    sqrt-log model the half-log correction is subtracted from the ordinate
    before fitting, so ``exponent`` is always the pure power of (1+t).
    """
    if model not in _MODELS:
        raise ValueError(f"unknown rate model {model!r}; expected one of {_MODELS}")
    t = np.asarray(times, dtype=float).ravel()
    y = np.asarray(values, dtype=float).ravel()
    if t.shape != y.shape:
        raise ValueError("times and values must have equal length")
    keep = _window_mask(t, window)
    t, y = t[keep], y[keep]
    if t.size < MIN_FIT_SAMPLES:
        raise ValueError(
            f"need at least {MIN_FIT_SAMPLES} samples in window, got {t.size}"
        )
    if np.any(~np.isfinite(y)) or np.any(y <= 0.0):
        raise ValueError("rate fit requires strictly positive finite values")
    if np.any(t < 0.0):
        raise ValueError("rate fit requires nonnegative times")

    x = np.log1p(t)
    ordinate = np.log(y)
    if model == MODEL_POWER_SQRTLOG:
        ordinate = ordinate - 0.5 * np.log(np.log(2.0 + t))

    slope, intercept = np.polyfit(x, ordinate, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((ordinate - fitted) ** 2))
    ss_tot = float(np.sum((ordinate - ordinate.mean()) ** 2))
    if ss_tot <= 1e-30:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return RateFit(
        exponent=float(slope),
        intercept=float(intercept),
        r_squared=float(r2),
        window=(float(t[0]), float(t[-1])),
        model=model,
        n_samples=int(t.size),
    )


@dataclass(frozen=True)
class BoundResult:
    """Supremum of ``weight(t) * value / normalizer`` over sampled times."""

    value: float
    argmax_t: float
    n_samples: int


def bound_constant(
    times,
    values,
    weight=None,
    normalizer: float = 1.0,
    window: tuple[float, float] | None = None,
) -> BoundResult:
    """Bound the constant in an inequality ``value <= C * normalizer / weight``.

    ``weight`` is a callable applied to the time array (identity if None).
    Returns the observed supremum together with the time attaining it.  A
    zero normalizer with identically zero data is allowed and yields C = 0,
    so empty solutions report a clean bound instead of 0/0.
    """
    t = np.asarray(times, dtype=float).ravel()
    y = np.asarray(values, dtype=float).ravel()
    if t.shape != y.shape:
        raise ValueError("times and values must have equal length")
    keep = _window_mask(t, window)
    t, y = t[keep], y[keep]
    if t.size == 0:
        raise ValueError("no samples in window")
    if not np.all(np.isfinite(y)):
        raise ValueError("bound_constant requires finite values")
    w = np.ones_like(t) if weight is None else np.asarray(weight(t), dtype=float)
    scaled = w * y
    norm = float(normalizer)
    if norm <= 0.0:
        if np.max(np.abs(scaled)) == 0.0:
            return BoundResult(value=0.0, argmax_t=float(t[0]), n_samples=int(t.size))
        raise ValueError("normalizer must be positive for nonzero data")
    scaled = scaled / norm
    i = int(np.argmax(scaled))
    return BoundResult(
        value=float(scaled[i]), argmax_t=float(t[i]), n_samples=int(t.size)
    )


def window_growth(
    times,
    values,
    early: tuple[float, float],
    late: tuple[float, float],
    weight=None,
    normalizer: float = 1.0,
) -> tuple[BoundResult, BoundResult, float]:
    """Compare sup constants on two windows.

    Returns (early bound, late bound, relative growth).  Growth is 0 when the
    early bound is zero and the late bound is zero too; infinite growth from
    an exactly zero early bound is reported as inf.
    """
    a = bound_constant(times, values, weight=weight, normalizer=normalizer, window=early)
    b = bound_constant(times, values, weight=weight, normalizer=normalizer, window=late)
    if a.value == 0.0:
        growth = 0.0 if b.value == 0.0 else math.inf
    else:
        growth = b.value / a.value - 1.0
    return a, b, growth


# ---------------------------------------------------------------------------
# Borderline sup-norm inequality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogSobolevResult:
    sup_norm: float
    grad_norm: float
    h2_norm: float
    lhs: float
    rhs: float
    passed: bool
    skipped: bool


def _spectral_norms(grid: Grid2D, u: np.ndarray) -> tuple[float, float, float]:
    """(L2, grad L2, full Hessian L2) of a real field, via Parseval."""
    if u.shape != (grid.n, grid.n):
        raise ValueError("field shape does not match grid")
    uh = np.fft.fft2(u)
    k2 = grid._k2_full
    scale = grid.dx * grid.dx / (grid.n * grid.n)
    p = np.abs(uh) ** 2
    l2 = math.sqrt(scale * float(np.sum(p)))
    g2 = math.sqrt(scale * float(np.sum(k2 * p)))
    h2 = math.sqrt(scale * float(np.sum(k2 * k2 * p)))
    return l2, g2, h2


def log_sobolev_check(grid: Grid2D, u: np.ndarray, rtol: float = 1e-8) -> LogSobolevResult:
    """Check ``sup|u|^2 <= (3 sqrt 3 / 2 pi) |grad u|^2 log(|u|_{H2}/|grad u|)``.

    Fields must be real with a nonvanishing gradient.  When the H2 norm is
    within a factor e of the gradient norm the logarithm is too small for the
    bound to be meaningful at finite resolution, so the check is skipped
    (reported via ``skipped``) rather than failed.
    """
    u = np.asarray(u)
    if np.iscomplexobj(u):
        raise ValueError("inequality check expects a real field")
    u = u.astype(float, copy=False)
    sup = float(np.max(np.abs(u)))
    l2, grad, hess = _spectral_norms(grid, u)
    h2_norm = math.sqrt(l2 * l2 + grad * grad + hess * hess)
    if grad <= 1e-14 * max(1.0, h2_norm):
        raise ValueError("gradient norm vanishes; inequality is degenerate")
    skipped = h2_norm < math.e * grad
    lhs = sup * sup
    rhs = SOBOLEV_CONSTANT * grad * grad * math.log(h2_norm / grad)
    passed = (not skipped) and (lhs <= rhs * (1.0 + rtol))
    return LogSobolevResult(
        sup_norm=sup,
        grad_norm=grad,
        h2_norm=h2_norm,
        lhs=lhs,
        rhs=rhs,
        passed=passed,
        skipped=skipped,
    )


def random_bandlimited_field(grid: Grid2D, cutoff: int = 12, seed: int = 0) -> np.ndarray:
    """Real random field with spectrum supported on modes |m| <= cutoff.

    Deterministic in (grid, cutoff, seed).  Band-limiting keeps the H2 norm
    finite and resolution-independent so inequality checks are meaningful.
    """
    if cutoff < 1 or cutoff >= grid.n // 2:
        raise ValueError("cutoff must be in [1, n/2)")
    rng = np.random.default_rng(seed)
    white = rng.standard_normal((grid.n, grid.n))
    m = np.fft.fftfreq(grid.n, d=1.0 / grid.n)
    keep = (np.abs(m)[:, None] <= cutoff) & (np.abs(m)[None, :] <= cutoff)
    field = np.fft.ifft2(np.fft.fft2(white) * keep).real
    peak = float(np.max(np.abs(field)))
    if peak == 0.0:  # vanishing draw is astronomically unlikely but cheap to guard
        raise ValueError("degenerate random draw")
    return field / peak


def log_sobolev_survey(
    grid: Grid2D, count: int = 200, cutoff: int = 12, seed: int = 0
) -> dict:
    """Run the inequality check on ``count`` seeded random fields.

    Returns pass/skip/fail counts plus the seeds of any failures.  A single
    failure indicates a bug (wrong constant or wrong norms), not a property
    of the field, so callers should treat failures as fatal.
    """
    n_passed = n_skipped = 0
    failures: list[int] = []
    worst_margin = math.inf
    for i in range(count):
        u = random_bandlimited_field(grid, cutoff=cutoff, seed=seed + i)
        res = log_sobolev_check(grid, u)
        if res.skipped:
            n_skipped += 1
        elif res.passed:
            n_passed += 1
            worst_margin = min(worst_margin, res.rhs / res.lhs)
        else:
            failures.append(seed + i)
    return {
        "count": count,
        "passed": n_passed,
        "skipped": n_skipped,
        "failed": len(failures),
        "failure_seeds": failures,
        "min_rhs_over_lhs": worst_margin if n_passed else math.nan,
    }
