"""Turn a finished run directory into a human-readable verdict sheet.

The report is a pure function of the run directory: same bytes in, same
bytes out.  It never re-evolves anything, it only reads the diagnostics
table, the manifest, and the first snapshot (for data norms).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass

import numpy as np

from .analysis import bound_constant, fit_rate, window_growth
from .diagnostics import decay_weight_exponent
from .initdata import energy_norms
from .runio import RunReader, _fmt

ENERGY_DRIFT_TOL = 1e-6
CHARGE_DRIFT_TOL = 1e-6
CONSTRAINT_TOL = 1e-8
FLUX_BUDGET_FACTOR = 1.05
SECOND_ENERGY_MAX_EXPONENT = 5.5
DECAY_GROWTH_TOL = 0.10


@dataclass(frozen=True)
class Check:
    name: str
    status: str  # PASS / FAIL / SKIP / INFO
    value: float
    threshold: float | None
    detail: str

    def line(self) -> str:
        return f"{self.name}: {self.status} ({self.detail})"


def _rel_drift(series: np.ndarray, floor: float) -> float:
    ref = float(series[0])
    return float(np.max(np.abs(series - ref))) / max(abs(ref), floor, 1e-30)


def _sup_weight_for(p: float):
    if p <= 4.0:
        return lambda t: np.sqrt(1.0 + t) / np.sqrt(np.log(2.0 + t))
    return lambda t: np.sqrt(1.0 + t)


def _checks(reader: RunReader) -> tuple[list[Check], dict]:
    diag = reader.diagnostics()
    p = reader.config.p
    t = diag["t"]
    checks: list[Check] = []
    constants: dict[str, float] = {}

    energy = diag["energy"]
    charge = diag["charge"]
    e_drift = _rel_drift(energy, 0.0) if abs(energy[0]) > 0 else float(np.max(np.abs(energy)))
    checks.append(
        Check(
            "energy-conservation",
            "PASS" if e_drift <= ENERGY_DRIFT_TOL else "FAIL",
            e_drift,
            ENERGY_DRIFT_TOL,
            f"max relative drift {e_drift:.3e}, tol {ENERGY_DRIFT_TOL:.0e}",
        )
    )
    c_drift = float(np.max(np.abs(charge - charge[0]))) / max(
        abs(float(charge[0])), abs(float(energy[0])), 1e-30
    )
    checks.append(
        Check(
            "charge-conservation",
            "PASS" if c_drift <= CHARGE_DRIFT_TOL else "FAIL",
            c_drift,
            CHARGE_DRIFT_TOL,
            f"max drift {c_drift:.3e} relative to max(|charge|, energy), tol {CHARGE_DRIFT_TOL:.0e}",
        )
    )

    if reader.config.flat:
        checks.append(
            Check("gauge-constraints", "SKIP", math.nan, CONSTRAINT_TOL, "flat mode, no gauge field")
        )
    else:
        worst = 0.0
        for col in ("res_coulomb", "res_gauss"):
            vals = diag[col]
            vals = vals[np.isfinite(vals)]
            if vals.size:
                worst = max(worst, float(np.max(vals)))
        checks.append(
            Check(
                "gauge-constraints",
                "PASS" if worst <= CONSTRAINT_TOL else "FAIL",
                worst,
                CONSTRAINT_TOL,
                f"max relative constraint residual {worst:.3e}, tol {CONSTRAINT_TOL:.0e}",
            )
        )

    # data norms from the t=0 snapshot
    snap0 = reader.load_snapshot(0)
    norms = energy_norms(reader.grid, snap0.phi, snap0.psi, p)
    constants["e00"] = norms.e00
    constants["e02"] = norms.e02

    kappa = decay_weight_exponent(p)
    pot_bound = bound_constant(
        t,
        diag["potential"],
        weight=lambda s: (1.0 + s) ** kappa,
        normalizer=norms.e02 if norms.e02 > 0 else 0.0,
    )
    constants["potential_decay"] = pot_bound.value
    span = float(t[-1] - t[0])
    if span >= 20.0 and pot_bound.value > 0.0:
        mid = t[0] + span / 4.0
        _, _, growth = window_growth(
            t,
            diag["potential"],
            early=(float(t[0]) + 1.0, float(mid)),
            late=(float(mid), float(t[-1])),
            weight=lambda s: (1.0 + s) ** kappa,
            normalizer=norms.e02,
        )
        status = "PASS" if growth <= DECAY_GROWTH_TOL else "FAIL"
        detail = (
            f"C={pot_bound.value:.4g} at t={pot_bound.argmax_t:.3g}, "
            f"late-window growth {growth:+.2%}"
        )
        checks.append(Check("potential-decay", status, pot_bound.value, None, detail))
    else:
        checks.append(
            Check(
                "potential-decay",
                "INFO",
                pot_bound.value,
                None,
                f"C={pot_bound.value:.4g} at t={pot_bound.argmax_t:.3g} (window too short to test stability)",
            )
        )

    sup_bound = bound_constant(t, diag["sup_phi"], weight=_sup_weight_for(p))
    constants["sup_decay"] = sup_bound.value
    checks.append(
        Check(
            "sup-decay",
            "INFO",
            sup_bound.value,
            None,
            f"C={sup_bound.value:.4g} at t={sup_bound.argmax_t:.3g}"
            + (" (sqrt-log corrected)" if p <= 4.0 else ""),
        )
    )
    wsup_bound = bound_constant(t, diag["sup_phi_weighted"])
    constants["sup_weighted"] = wsup_bound.value
    checks.append(
        Check(
            "weighted-sup",
            "INFO",
            wsup_bound.value,
            None,
            f"C={wsup_bound.value:.4g} at t={wsup_bound.argmax_t:.3g}",
        )
    )

    if reader.config.toggles.null_flux:
        flux_final = float(diag["flux_null"][-1])
        budget = FLUX_BUDGET_FACTOR * norms.e00
        checks.append(
            Check(
                "null-flux-budget",
                "PASS" if flux_final <= budget + 1e-30 else "FAIL",
                flux_final,
                budget,
                f"total outgoing flux {flux_final:.6g} vs budget {budget:.6g}",
            )
        )
        constants["flux_null_total"] = flux_final
        constants["flux_null_weighted_total"] = float(diag["flux_null_weighted"][-1])
    else:
        checks.append(
            Check("null-flux-budget", "SKIP", math.nan, None, "flux accounting disabled")
        )

    se = diag["second_energy"]
    fit_ok = (
        np.all(np.isfinite(se))
        and np.all(se > 0)
        and t.size >= 8
        and float(t[-1]) > float(t[0]) + 1.0
    )
    if fit_ok:
        fit = fit_rate(t, se, window=(max(2.0, float(t[0])), float(t[-1])) if t[-1] > 4.0 else None)
        constants["second_energy_exponent"] = fit.exponent
        checks.append(
            Check(
                "second-energy-growth",
                "PASS" if fit.exponent <= SECOND_ENERGY_MAX_EXPONENT else "FAIL",
                fit.exponent,
                SECOND_ENERGY_MAX_EXPONENT,
                f"fitted (1+t)-exponent {fit.exponent:.3f} (r2 {fit.r_squared:.4f}), cap {SECOND_ENERGY_MAX_EXPONENT}",
            )
        )
    else:
        checks.append(
            Check("second-energy-growth", "SKIP", math.nan, None, "no positive series to fit")
        )

    return checks, constants


_EXTRACTS = {
    "conservation.csv": ("t", "energy", "charge", "res_coulomb", "res_gauss"),
    "decay.csv": (
        "t",
        "potential",
        "weighted_potential",
        "sup_phi",
        "sup_phi_inner",
        "sup_phi_weighted",
        "l2_phi",
    ),
    "flux.csv": ("t", "flux_null", "flux_null_weighted", "flux_null_interior"),
}


def _write_extracts(reader: RunReader, ex_dir: str) -> None:
    diag = reader.diagnostics()
    os.makedirs(ex_dir, exist_ok=True)
    for fname, cols in sorted(_EXTRACTS.items()):
        with open(os.path.join(ex_dir, fname), "w") as fh:
            fh.write(",".join(cols) + "\n")
            for i in range(diag["t"].size):
                fh.write(",".join(_fmt(float(diag[c][i])) for c in cols) + "\n")


def build_report(run_dir: str, out_dir: str | None = None) -> dict:
    """Evaluate all checks, write report.json and extracts/, return the report."""
    reader = RunReader(run_dir)
    if not reader.completed:
        raise RuntimeError(
            f"run at {run_dir} has status {reader.manifest['status']!r}; report needs a completed run"
        )
    checks, constants = _checks(reader)
    report = {
        "format": "cshwave-report",
        "format_version": 1,
        "config_digest": reader.manifest["config_digest"],
        "kernel_lane": reader.manifest["kernel_lane"],
        "p": reader.config.p,
        "checks": [asdict(c) for c in checks],
        "constants": {k: constants[k] for k in sorted(constants)},
        "verdict_lines": [c.line() for c in checks],
        "overall": "FAIL" if any(c.status == "FAIL" for c in checks) else "PASS",
    }
    target = out_dir or os.path.join(run_dir, "report")
    os.makedirs(target, exist_ok=True)
    with open(os.path.join(target, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_extracts(reader, os.path.join(target, "extracts"))
    return report
