"""Run configuration: versioned JSON in, validated dataclass out.

A config file may specify any subset of the keys; missing keys take the
defaults below. Unknown keys are rejected so typos fail loudly instead of
silently running the default. ``digest`` hashes the fully resolved config,
so two files that resolve to the same run share a digest.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import jsonschema

from .initdata import InitialDataSpec, support_radius

__all__ = ["RunConfig", "Toggles", "CONFIG_VERSION", "load_config", "config_digest"]

CONFIG_VERSION = 1

_DATA_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "family": {"enum": ["gaussian", "ring", "bump", "random"]},
        "amplitude": {"type": "number"},
        "sigma": {"type": "number", "exclusiveMinimum": 0},
        "center": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 2,
            "maxItems": 2,
        },
        "winding": {"type": "integer", "minimum": 0},
        "velocity": {"enum": ["zero", "iphi", "random"]},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "cutoff": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "p": {"type": "number", "exclusiveMinimum": 1},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 32},
                "L": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "time": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "cfl": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "t_final": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "diag_every": {"type": "integer", "minimum": 1},
                "snapshot_every": {"type": "integer", "minimum": 1},
            },
        },
        "flat": {"type": "boolean"},
        "data": _DATA_SCHEMA,
        "toggles": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "null_flux": {"type": "boolean"},
                "second_order": {"type": "boolean"},
            },
        },
    },
}


@dataclass(frozen=True)
class Toggles:
    """Optional per-step work. Off buys speed, costs columns (nan)."""

    null_flux: bool = True
    second_order: bool = True


@dataclass(frozen=True)
class RunConfig:
    p: float = 3.0
    n: int = 256
    L: float = 40.0
    cfl: float = 0.25
    t_final: float = 10.0
    diag_every: int = 8
    snapshot_every: int = 32
    flat: bool = False
    data: InitialDataSpec = field(default_factory=InitialDataSpec)
    toggles: Toggles = field(default_factory=Toggles)

    def __post_init__(self) -> None:
        if self.snapshot_every % self.diag_every != 0:
            raise ValueError(
                "snapshot_every must be a multiple of diag_every so every "
                "snapshot time carries a diagnostics row"
            )
        guard = 2.0 * (self.t_final + support_radius(self.data) + 2.0)
        if self.L < guard:
            raise ValueError(
                f"box size {self.L} too small for t_final={self.t_final}: "
                f"periodic wraparound would pollute the run (need L >= {guard})"
            )

    def resolved(self) -> dict[str, Any]:
        """Full JSON form with every default written out."""
        return {
            "version": CONFIG_VERSION,
            "p": self.p,
            "grid": {"n": self.n, "L": self.L},
            "time": {"cfl": self.cfl, "t_final": self.t_final},
            "output": {
                "diag_every": self.diag_every,
                "snapshot_every": self.snapshot_every,
            },
            "flat": self.flat,
            "data": {
                "family": self.data.family,
                "amplitude": self.data.amplitude,
                "sigma": self.data.sigma,
                "center": list(self.data.center),
                "winding": self.data.winding,
                "velocity": self.data.velocity,
                "radius": self.data.radius,
                "cutoff": self.data.cutoff,
                "seed": self.data.seed,
            },
            "toggles": asdict(self.toggles),
        }


def config_digest(cfg: RunConfig) -> str:
    blob = json.dumps(cfg.resolved(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _from_mapping(raw: dict[str, Any]) -> RunConfig:
    jsonschema.validate(raw, SCHEMA)
    grid = raw.get("grid", {})
    time = raw.get("time", {})
    out = raw.get("output", {})
    data_raw = dict(raw.get("data", {}))
    if "center" in data_raw:
        data_raw["center"] = tuple(data_raw["center"])
    return RunConfig(
        p=raw.get("p", 3.0),
        n=grid.get("n", 256),
        L=grid.get("L", 40.0),
        cfl=time.get("cfl", 0.25),
        t_final=time.get("t_final", 10.0),
        diag_every=out.get("diag_every", 8),
        snapshot_every=out.get("snapshot_every", 32),
        flat=raw.get("flat", False),
        data=InitialDataSpec(**data_raw),
        toggles=Toggles(**raw.get("toggles", {})),
    )


def load_config(path_or_mapping) -> RunConfig:
    """Accepts a JSON file path or an already-parsed mapping."""
    if isinstance(path_or_mapping, dict):
        return _from_mapping(path_or_mapping)
    with open(path_or_mapping, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"{path_or_mapping}: top level must be a JSON object")
    return _from_mapping(raw)
