"""Parameter sweeps: run a cartesian grid of configurations and aggregate
headline numbers into one deterministic CSV.

Rows are keyed by (p, amplitude, n) and always written in sorted key order,
so the aggregate file is byte-identical no matter how many workers ran the
jobs or in what order they finished.  A failed run (blowup, bad config)
becomes a row with status "failed" instead of killing the sweep.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import RunConfig, load_config
from .runio import RunReader, _fmt

AGGREGATE_NAME = "sweep.csv"

_COLUMNS = (
    "p",
    "amplitude",
    "n",
    "status",
    "dt",
    "n_steps",
    "energy_initial",
    "energy_final",
    "energy_drift",
    "charge_drift",
    "sup_phi_final",
    "flux_null",
    "run_dir",
    "fail_reason",
)


@dataclass(frozen=True)
class SweepSpec:
    base: dict
    p_values: tuple[float, ...]
    amplitudes: tuple[float, ...]
    n_values: tuple[int, ...]

    def jobs(self) -> list[tuple[float, float, int]]:
        out = [
            (p, a, n)
            for p in self.p_values
            for a in self.amplitudes
            for n in self.n_values
        ]
        return sorted(out)


def load_sweep(path_or_mapping) -> SweepSpec:
    """Accepts {"base": <run config mapping>, "sweep": {"p": [...], ...}}.

    Every sweep axis is optional; a missing axis keeps the base value.
    """
    if isinstance(path_or_mapping, (str, os.PathLike)):
        with open(path_or_mapping) as fh:
            raw = json.load(fh)
    else:
        raw = dict(path_or_mapping)
    base = dict(raw.get("base", {}))
    axes = dict(raw.get("sweep", {}))
    unknown = set(axes) - {"p", "amplitude", "n"}
    if unknown:
        raise ValueError(f"unknown sweep axes: {sorted(unknown)}")
    base_cfg = load_config(base)  # validate the base eagerly
    p_values = tuple(float(v) for v in axes.get("p", [base_cfg.p]))
    amplitudes = tuple(float(v) for v in axes.get("amplitude", [base_cfg.data.amplitude]))
    n_values = tuple(int(v) for v in axes.get("n", [base_cfg.n]))
    if not (p_values and amplitudes and n_values):
        raise ValueError("sweep axes must be nonempty")
    return SweepSpec(base=base, p_values=p_values, amplitudes=amplitudes, n_values=n_values)


def _job_dirname(p: float, amplitude: float, n: int) -> str:
    def tag(x: float) -> str:
        return repr(float(x)).replace(".", "p").replace("-", "m")

    return f"run_p{tag(p)}_a{tag(amplitude)}_n{n}"


def _reason(prefix: str, exc: Exception) -> str:
    # fail_reason lives in an unquoted CSV cell: first line only, no commas
    first = f"{prefix}{exc}".splitlines()[0]
    return first.replace(",", ";")


def _run_one(args: tuple) -> dict:
    """Worker body. Module-level so it pickles under multiprocessing."""
    base, out_root, p, amplitude, n = args
    from .dynamics import BlowupError, run  # deferred: keep worker import light

    row = {
        "p": p,
        "amplitude": amplitude,
        "n": n,
        "status": "failed",
        "dt": math.nan,
        "n_steps": 0,
        "energy_initial": math.nan,
        "energy_final": math.nan,
        "energy_drift": math.nan,
        "charge_drift": math.nan,
        "sup_phi_final": math.nan,
        "flux_null": math.nan,
        "run_dir": _job_dirname(p, amplitude, n),
        "fail_reason": "",
    }
    run_dir = os.path.join(out_root, row["run_dir"])
    try:
        mapping = json.loads(json.dumps(base))  # deep copy, keeps base pristine
        mapping["p"] = p
        grid = dict(mapping.get("grid", {}))
        grid["n"] = n
        mapping["grid"] = grid
        data = dict(mapping.get("data", {}))
        data["amplitude"] = amplitude
        mapping["data"] = data
        cfg = load_config(mapping)
        run(cfg, run_dir)
    except BlowupError as exc:
        row["fail_reason"] = f"blowup at t={exc.t:.6g}"
    except Exception as exc:  # config errors, IO, numerics
        row["fail_reason"] = _reason(f"{type(exc).__name__}: ", exc)
        return row

    try:
        reader = RunReader(run_dir)
        diag = reader.diagnostics()
        energy = diag["energy"]
        charge = diag["charge"]
        e0 = float(energy[0])
        c0 = float(charge[0])
        row["status"] = reader.manifest["status"]
        row["dt"] = float(reader.manifest["dt"])
        row["n_steps"] = int(reader.manifest["n_steps"])
        row["energy_initial"] = e0
        row["energy_final"] = float(energy[-1])
        row["energy_drift"] = float(np.max(np.abs(energy - e0))) / max(abs(e0), 1e-30)
        row["charge_drift"] = float(np.max(np.abs(charge - c0))) / max(abs(c0), abs(e0), 1e-30)
        row["sup_phi_final"] = float(diag["sup_phi"][-1])
        row["flux_null"] = float(diag["flux_null"][-1])
    except Exception as exc:
        row["fail_reason"] = row["fail_reason"] or _reason(
            f"postprocess: {type(exc).__name__}: ", exc
        )
    return row


def run_sweep(spec: SweepSpec, out_root: str, workers: int = 1) -> str:
    """Execute all jobs and write the aggregate CSV. Returns its path."""
    os.makedirs(out_root, exist_ok=True)
    jobs = spec.jobs()
    args = [(spec.base, out_root, p, a, n) for (p, a, n) in jobs]
    if workers <= 1:
        rows = [_run_one(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_one, args))
    # map() preserves submission order, which is already the sorted job order;
    # sort again anyway so the invariant does not hinge on executor details
    rows.sort(key=lambda r: (r["p"], r["amplitude"], r["n"]))

    path = os.path.join(out_root, AGGREGATE_NAME)
    with open(path, "w") as fh:
        fh.write(",".join(_COLUMNS) + "\n")
        for row in rows:
            cells = []
            for col in _COLUMNS:
                v = row[col]
                if isinstance(v, float):
                    cells.append(_fmt(v))
                else:
                    cells.append(str(v))
            fh.write(",".join(cells) + "\n")
    return path
