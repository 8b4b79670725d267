"""Kernel lane selection.

Set CSHWAVE_NUMBA=0 to force the vectorized numpy fallback; any other value
(or an importable numba) selects the jitted lane. The choice is made once at
import time so both lanes can be benchmarked from separate processes.
"""

from __future__ import annotations

import os

_flag = os.environ.get("CSHWAVE_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "no", "off")

if _want_numba:
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False


def active_lane() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
