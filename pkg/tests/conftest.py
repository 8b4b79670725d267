"""Shared fixtures: session-cached solver runs reused across test modules.

Runs are keyed by the resolved-config digest. Set CSHWAVE_TEST_CACHE to a
directory to persist them between pytest invocations (the heavy acceptance
runs take minutes to build); without it everything lands in pytest's session
tmp dir and is rebuilt each time.
"""

from __future__ import annotations

import os
import shutil

import pytest

from cshwave.config import config_digest, load_config
from cshwave.dynamics import run
from cshwave.kernels import active_lane
from cshwave.runio import RunReader

CACHE_ENV = "CSHWAVE_TEST_CACHE"

# --- acceptance-scale configurations ---------------------------------------

DEFAULT_P3 = {
    "p": 3.0,
    "grid": {"n": 256, "L": 40.0},
    "time": {"cfl": 0.125, "t_final": 10.0},
    "output": {"diag_every": 4, "snapshot_every": 4},
    "data": {"family": "gaussian", "amplitude": 1.0, "velocity": "iphi"},
}

# identical physics at double the step: pairs with DEFAULT_P3 for dt-refinement
# ratio checks. Note cfl 0.25 alone leaves energy drift at 2.8e-6, which is why
# the default sits at 0.125 (drift 9.3e-8, ratio between the two ~30x).
COARSE_P3 = {**DEFAULT_P3, "time": {"cfl": 0.25, "t_final": 10.0}}

DEFAULT_P5 = {
    **DEFAULT_P3,
    "p": 5.0,
    "output": {"diag_every": 4, "snapshot_every": 8},
}

# Net-neutral data for the conformal-charge audits. The charged gaussian
# carries total charge -pi/2 a^2 sigma^2, and on the torus the gauge solver
# can only represent its mean-free part; the leftover uniform background
# breaks the conformal identity by O(charge / L^2) per unit time. A winding-1
# zero-velocity gaussian has pointwise j0 = 0, so nothing is lost to the
# background and the identity closes at truncation level while the gauge
# sector stays active.
_NEUTRAL_DATA = {
    "family": "gaussian",
    "amplitude": 1.0,
    "winding": 1,
    "velocity": "zero",
}

NEUTRAL_P3 = {**DEFAULT_P3, "data": _NEUTRAL_DATA}
NEUTRAL_P3_COARSE = {**COARSE_P3, "data": _NEUTRAL_DATA}
NEUTRAL_P5 = {**DEFAULT_P5, "data": _NEUTRAL_DATA}


def extended_config(p: float, family: str = "gaussian", amplitude: float = 1.0) -> dict:
    return {
        "p": p,
        "grid": {"n": 512, "L": 100.0},
        "time": {"cfl": 0.25, "t_final": 40.0},
        "output": {"diag_every": 8, "snapshot_every": 128},
        "data": {"family": family, "amplitude": amplitude, "velocity": "iphi"},
    }


def flat_conformal_config(snapshot_every: int) -> dict:
    # gaussian, not bump: the compactified-equation stencils interpolate the
    # stored spectra, and the bump's slowly decaying spectrum leaves a spatial
    # error floor at n = 128 that washes out the temporal convergence order
    # this pair of runs exists to measure.
    return {
        "p": 4.5,
        "flat": True,
        "grid": {"n": 128, "L": 20.0},
        "time": {"cfl": 0.25, "t_final": 2.0},
        "output": {"diag_every": 2, "snapshot_every": snapshot_every},
        "data": {"family": "gaussian", "amplitude": 1.0, "velocity": "iphi"},
    }


def decoupling_config(amplitude: float, flat: bool, winding: int = 1) -> dict:
    # winding 1 matters: for a radial pulse the solved potential is purely
    # azimuthal while grad phi is radial, so the cubic coupling terms cancel
    # pointwise and the gauged/ungauged gap collapses to O(a^5). The vortex
    # breaks that orthogonality and restores the generic O(a^3) scaling.
    return {
        "p": 3.0,
        "flat": flat,
        "grid": {"n": 64, "L": 20.0},
        "time": {"cfl": 0.25, "t_final": 1.0},
        "output": {"diag_every": 13, "snapshot_every": 13},
        "data": {
            "family": "gaussian",
            "amplitude": amplitude,
            "winding": winding,
            "velocity": "iphi",
        },
    }


ZERO_RUN = {
    "p": 3.0,
    "grid": {"n": 64, "L": 20.0},
    "time": {"cfl": 0.25, "t_final": 1.0},
    "output": {"diag_every": 4, "snapshot_every": 4},
    "data": {"family": "gaussian", "amplitude": 0.0},
}

# ---------------------------------------------------------------------------


@pytest.fixture(scope="session")
def run_root(tmp_path_factory) -> str:
    env = os.environ.get(CACHE_ENV)
    if env:
        os.makedirs(env, exist_ok=True)
        return env
    return str(tmp_path_factory.mktemp("runs"))


def build_cached_run(mapping: dict, root: str) -> str:
    """Run the config into <root>/<digest>-<lane>, reusing a completed run.

    The kernel lane is part of the key: lanes agree to solver tolerance but
    not bit-for-bit, and the determinism test compares bytes.
    """
    cfg = load_config(mapping)
    dest = os.path.join(root, f"{config_digest(cfg)}-{active_lane()}")
    if os.path.isdir(dest):
        try:
            if RunReader(dest).completed:
                return dest
        except Exception:
            pass
        shutil.rmtree(dest)
    run(cfg, dest)
    return dest


@pytest.fixture(scope="session")
def reader_factory(run_root):
    def factory(mapping: dict) -> RunReader:
        return RunReader(build_cached_run(mapping, run_root))

    return factory


@pytest.fixture(scope="session")
def default_p3(reader_factory) -> RunReader:
    return reader_factory(DEFAULT_P3)


@pytest.fixture(scope="session")
def coarse_p3(reader_factory) -> RunReader:
    return reader_factory(COARSE_P3)


@pytest.fixture(scope="session")
def default_p5(reader_factory) -> RunReader:
    return reader_factory(DEFAULT_P5)


@pytest.fixture(scope="session")
def neutral_p3(reader_factory) -> RunReader:
    return reader_factory(NEUTRAL_P3)


@pytest.fixture(scope="session")
def neutral_p3_coarse(reader_factory) -> RunReader:
    return reader_factory(NEUTRAL_P3_COARSE)


@pytest.fixture(scope="session")
def neutral_p5(reader_factory) -> RunReader:
    return reader_factory(NEUTRAL_P5)


@pytest.fixture(scope="session")
def extended_p3(reader_factory) -> RunReader:
    return reader_factory(extended_config(3.0))


@pytest.fixture(scope="session")
def extended_p4(reader_factory) -> RunReader:
    return reader_factory(extended_config(4.0))


@pytest.fixture(scope="session")
def extended_p5(reader_factory) -> RunReader:
    return reader_factory(extended_config(5.0))


@pytest.fixture(scope="session")
def extended_bump(reader_factory) -> RunReader:
    return reader_factory(extended_config(4.5, family="bump", amplitude=0.5))


@pytest.fixture(scope="session")
def zero_reader(reader_factory) -> RunReader:
    return reader_factory(ZERO_RUN)


# --- acceptance verdict lines ----------------------------------------------

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def criterion_report():
    """Collects one verdict line per acceptance criterion; printed at exit."""

    def record(name: str, passed: bool, detail: str) -> None:
        _ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
