"""Backend switch for the numeric kernels.

The compiled numba path is used when numba imports cleanly and the
``WVC_BACKEND`` environment variable is unset or ``numba``.  Setting
``WVC_BACKEND=numpy`` selects the pure-numpy fallback everywhere.
"""

import os

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def _wrap(fn):
            return fn

        return _wrap


BACKENDS = ("numba", "numpy")


def active_backend() -> str:
    """Return the backend selected by ``WVC_BACKEND`` (default numba)."""
    name = os.environ.get("WVC_BACKEND", "numba").strip().lower() or "numba"
    if name not in BACKENDS:
        raise ValueError(f"WVC_BACKEND must be one of {BACKENDS}, got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        return "numpy"
    return name
