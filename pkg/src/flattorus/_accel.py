"""Backend selection for the numeric kernels.

Set ``FLATTORUS_NUMBA=0`` in the environment to force the pure-numpy path.
The flag is read once at import time.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

_flag = os.environ.get("FLATTORUS_NUMBA", "1").strip().lower()
NUMBA_REQUESTED = _flag not in ("0", "false", "no", "off")
USE_NUMBA = NUMBA_REQUESTED and numba is not None


def njit(fn):
    """Compile ``fn`` with numba when available; otherwise return it unchanged.

    The uncompiled function is still reachable as ``fn.py_func`` on the numba
    dispatcher, which the benchmark uses for sanity checks.
    """
    if numba is None:
        return fn
    return numba.njit(cache=True)(fn)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
