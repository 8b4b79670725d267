"""On-disk layout of a run directory.

    out/
      config.json              fully resolved config (defaults written out)
      diagnostics.csv          one row per sample, columns as in diagnostics.COLUMNS
      diagnostics_schema.json  column name -> meaning
      snapshots/snap_<step>.bin
      manifest.json            index of everything above, written last

Snapshots are a fixed little-endian binary format: magic "CSHW", format
version u32, n u32, then L, t, p as f64, then four n*n row-major f64 planes
(Re phi, Im phi, Re psi, Im psi). Reruns of the same config must reproduce
diagnostics.csv byte for byte, so rows are formatted with repr-shortest
floats and no timestamps; wall-clock info lives only in the manifest.
"""

from __future__ import annotations

import json
import os
import struct
from typing import Any

import numpy as np

from . import diagnostics as diag_mod
from .config import RunConfig, config_digest, load_config
from .grid import Grid2D, make_grid
from .state import FieldState

__all__ = [
    "SNAPSHOT_MAGIC",
    "SNAPSHOT_VERSION",
    "write_snapshot",
    "read_snapshot",
    "RunWriter",
    "RunReader",
]

SNAPSHOT_MAGIC = b"CSHW"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIddd")


def write_snapshot(path: str, state: FieldState) -> None:
    grid = state.grid
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(
                SNAPSHOT_MAGIC, SNAPSHOT_VERSION, grid.n, grid.L, state.t, state.p
            )
        )
        for plane in (
            state.phi.real,
            state.phi.imag,
            state.psi.real,
            state.psi.imag,
        ):
            fh.write(np.ascontiguousarray(plane, dtype="<f8").tobytes())


def read_snapshot(path: str, grid: Grid2D | None = None) -> FieldState:
    """Pass the grid when reading many snapshots from one run."""
    with open(path, "rb") as fh:
        magic, version, n, L, t, p = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: not a field snapshot (magic {magic!r})")
        if version != SNAPSHOT_VERSION:
            raise ValueError(f"{path}: unsupported snapshot version {version}")
        planes = np.fromfile(fh, dtype="<f8", count=4 * n * n)
    if planes.size != 4 * n * n:
        raise ValueError(f"{path}: truncated snapshot")
    planes = planes.reshape(4, n, n)
    if grid is None:
        grid = make_grid(n, L)
    elif grid.n != n or abs(grid.L - L) > 1e-12 * L:
        raise ValueError(f"{path}: snapshot grid ({n}, {L}) does not match caller's")
    phi = planes[0] + 1j * planes[1]
    psi = planes[2] + 1j * planes[3]
    return FieldState(grid=grid, t=t, p=p, phi=phi, psi=psi)


def _fmt(x: float) -> str:
    return repr(float(x))


class RunWriter:
    """Creates the run directory up front, fills it incrementally.

    The manifest is written only by finalize(), so a directory without
    manifest.json is recognizably incomplete.
    """

    def __init__(self, out_dir: str, config: RunConfig, dt: float, n_steps: int):
        self.out_dir = out_dir
        self.config = config
        self.dt = dt
        self.n_steps = n_steps
        self.snapshots: list[dict[str, Any]] = []
        os.makedirs(out_dir, exist_ok=True)
        os.makedirs(os.path.join(out_dir, "snapshots"), exist_ok=True)
        with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as fh:
            json.dump(config.resolved(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(
            os.path.join(out_dir, "diagnostics_schema.json"), "w", encoding="utf-8"
        ) as fh:
            json.dump(diag_mod.SCHEMA_DOC, fh, indent=2)
            fh.write("\n")
        self._csv = open(
            os.path.join(out_dir, "diagnostics.csv"), "w", encoding="utf-8", newline=""
        )
        self._csv.write(",".join(diag_mod.COLUMNS) + "\n")
        self._csv.flush()

    def add_record(self, record: diag_mod.DiagnosticsRecord) -> None:
        self._csv.write(",".join(_fmt(v) for v in record.row()) + "\n")
        self._csv.flush()

    def add_snapshot(self, step: int, state: FieldState) -> None:
        rel = os.path.join("snapshots", f"snap_{step:08d}.bin")
        write_snapshot(os.path.join(self.out_dir, rel), state)
        self.snapshots.append({"step": step, "t": state.t, "file": rel})

    def finalize(
        self,
        status: str,
        wall_seconds: float,
        flux_cutoff_t: float | None,
        background: float,
        fail_reason: str | None = None,
    ) -> dict[str, Any]:
        self._csv.close()
        from . import __version__
        from .kernels import active_lane

        manifest = {
            "format": "cshwave-run",
            "format_version": 1,
            "package_version": __version__,
            "numpy_version": np.__version__,
            "kernel_lane": active_lane(),
            "status": status,
            "fail_reason": fail_reason,
            "config": self.config.resolved(),
            "config_digest": config_digest(self.config),
            "dt": self.dt,
            "n_steps": self.n_steps,
            "wall_seconds": wall_seconds,
            "flux_cutoff_t": flux_cutoff_t,
            "charge_background": background,
            "diagnostics": "diagnostics.csv",
            "snapshots": self.snapshots,
        }
        with open(os.path.join(self.out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
        return manifest


class RunReader:
    """Random access into a finished run directory."""

    def __init__(self, run_dir: str):
        self.run_dir = run_dir
        with open(os.path.join(run_dir, "manifest.json"), "r", encoding="utf-8") as fh:
            self.manifest = json.load(fh)
        if self.manifest.get("format") != "cshwave-run":
            raise ValueError(f"{run_dir}: not a run directory")
        self.config = load_config(self.manifest["config"])
        self.grid = make_grid(self.config.n, self.config.L)
        self.snapshot_times = np.array(
            [s["t"] for s in self.manifest["snapshots"]], dtype=float
        )
        self._diag: dict[str, np.ndarray] | None = None

    @property
    def completed(self) -> bool:
        return self.manifest["status"] == "completed"

    def load_snapshot(self, index: int) -> FieldState:
        entry = self.manifest["snapshots"][index]
        return read_snapshot(os.path.join(self.run_dir, entry["file"]), self.grid)

    def load_at(self, t: float) -> FieldState:
        idx = int(np.argmin(np.abs(self.snapshot_times - t)))
        found = self.snapshot_times[idx]
        if abs(found - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(
                f"no snapshot at t={t}; nearest is {found} "
                f"(snapshot cadence too coarse?)"
            )
        return self.load_snapshot(idx)

    def diagnostics(self) -> dict[str, np.ndarray]:
        if self._diag is None:
            path = os.path.join(self.run_dir, self.manifest["diagnostics"])
            raw = np.genfromtxt(path, delimiter=",", names=True)
            names = raw.dtype.names
            # single-row files come back 0-d; promote for uniform indexing
            raw = np.atleast_1d(raw)
            self._diag = {name: raw[name].astype(float) for name in names}
        return self._diag
