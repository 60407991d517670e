"""Kernel backend selection.

The hot kernels exist twice: a numba-compiled module and a pure-numpy
reference with identical semantics.  The environment variable
IONRAMP_BACKEND picks one:

* ``numba``  - require the compiled kernels, fail if numba is missing
* ``numpy``  - force the pure-numpy fallback
* ``auto``   - prefer numba, fall back to numpy (default)

The choice is made once at import time.  ``benchmarks/bench_kernels.py``
imports both modules directly and compares them.
"""

from __future__ import annotations

import os

_env = os.environ.get("IONRAMP_BACKEND", "auto").strip().lower()
if _env not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"IONRAMP_BACKEND={_env!r} not understood: use 'numba', 'numpy' or 'auto'"
    )

if _env == "numpy":
    from . import _kernels_numpy as _impl

    BACKEND = "numpy"
elif _env == "numba":
    from . import _kernels_numba as _impl

    BACKEND = "numba"
else:
    try:
        from . import _kernels_numba as _impl

        BACKEND = "numba"
    except Exception:  # numba missing or failing to initialize
        from . import _kernels_numpy as _impl

        BACKEND = "numpy"

apply_h = _impl.apply_h
rk4_chunk = _impl.rk4_chunk
lz_propagate = _impl.lz_propagate


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return BACKEND
