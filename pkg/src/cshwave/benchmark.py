"""Micro-benchmark of the pointwise kernels: compiled lane vs numpy lane.

Run as ``python3 -m cshwave.benchmark [--n 256] [--repeats 20]``.  Both lane
modules are imported directly, so this works no matter which lane the
package selected at import time, and it doubles as an agreement check
(max elementwise deviation is printed per kernel).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from . import _kernels_numpy as lane_numpy
from .kernels import NUMBA_ENABLED, active_lane


def _inputs(n: int, seed: int = 7):
    rng = np.random.default_rng(seed)

    def cplx():
        return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))).astype(
            np.complex128
        )

    def real():
        return rng.standard_normal((n, n))

    phi, psi, lap, d1, d2 = cplx(), cplx(), cplx(), cplx(), cplx()
    a0, a1, a2 = real(), real(), real()
    p = 3.0
    nonlin = lane_numpy.nonlinear_power(phi, p)
    return {
        "nonlinear_power": (phi, p),
        "charge_density": (phi, psi),
        "spatial_current": (phi, d1, a1),
        "covariant": (d1, a1, phi),
        "phi_rate": (psi, a0, phi),
        "psi_rate": (lap, d1, d2, phi, psi, a0, a1, a2, nonlin),
        "energy_density": (psi, d1, d2, phi, p),
        "potential_density": (phi, p),
    }


def _time(fn, args, repeats: int) -> float:
    fn(*args)  # warm up (JIT compile on the compiled lane)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run_benchmark(n: int = 256, repeats: int = 20) -> list[dict]:
    try:
        from . import _kernels_numba as lane_numba

        numba_ok = True
    except Exception:
        lane_numba = None
        numba_ok = False

    cases = _inputs(n)
    rows = []
    for name, args in cases.items():
        base = _time(getattr(lane_numpy, name), args, repeats)
        row = {"kernel": name, "numpy_ms": base * 1e3}
        if numba_ok:
            fast = _time(getattr(lane_numba, name), args, repeats)
            ref = getattr(lane_numpy, name)(*args)
            alt = getattr(lane_numba, name)(*args)
            row["numba_ms"] = fast * 1e3
            row["speedup"] = base / fast if fast > 0 else np.inf
            row["max_dev"] = float(np.max(np.abs(np.asarray(alt) - np.asarray(ref))))
        rows.append(row)
    return rows


def _full_step_ms(n: int, repeats: int) -> float:
    from .config import RunConfig
    from .dynamics import rk4_step
    from .initdata import InitialDataSpec, build_data
    from .grid import make_grid
    from .state import FieldState

    cfg = RunConfig(n=n, L=40.0, t_final=1.0, data=InitialDataSpec(family="gaussian"))
    grid = make_grid(cfg.n, cfg.L)
    phi0, psi0 = build_data(grid, cfg.data)
    state = FieldState(grid=grid, t=0.0, p=cfg.p, phi=phi0, psi=psi0)
    dt = cfg.cfl * grid.dx
    rk4_step(state, dt)  # warm up
    best = np.inf
    for _ in range(max(3, repeats // 4)):
        t0 = time.perf_counter()
        rk4_step(state, dt)
        best = min(best, time.perf_counter() - t0)
    return best * 1e3


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args(argv)

    print(f"grid {args.n}x{args.n}, active lane: {active_lane()} (numba available: {NUMBA_ENABLED})")
    rows = run_benchmark(args.n, args.repeats)
    has_numba = "numba_ms" in rows[0]
    head = f"{'kernel':<18} {'numpy ms':>10}"
    if has_numba:
        head += f" {'numba ms':>10} {'speedup':>8} {'max dev':>10}"
    print(head)
    for row in rows:
        line = f"{row['kernel']:<18} {row['numpy_ms']:>10.4f}"
        if has_numba:
            line += f" {row['numba_ms']:>10.4f} {row['speedup']:>8.2f} {row['max_dev']:>10.2e}"
        print(line)
    step_ms = _full_step_ms(args.n, args.repeats)
    print(f"full integrator step ({active_lane()} lane): {step_ms:.3f} ms")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
