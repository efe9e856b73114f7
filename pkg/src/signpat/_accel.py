"""Backend selection for the hot kernels.

Kernels are compiled with numba when it is importable and the environment
variable ``SIGNPAT_DISABLE_NUMBA`` is unset (or ``0``). Otherwise the
vectorized numpy implementations are used. Both backends are always
importable so tests and benchmarks can compare them.
"""

from __future__ import annotations

import os

_flag = os.environ.get("SIGNPAT_DISABLE_NUMBA", "0").strip().lower()
NUMBA_REQUESTED = _flag in ("", "0", "false", "no")

try:
    import numba  # noqa: F401
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


USE_NUMBA = HAVE_NUMBA and NUMBA_REQUESTED


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
