"""Stepping-backend selection.

The compiled Cython kernel is used when importable; otherwise the pure
NumPy kernel. Both produce bit-identical results, so the choice only
affects speed. Override with ``LSASIM_BACKEND=python`` or
``LSASIM_BACKEND=cython`` (the latter raises if the extension is missing).
"""

from __future__ import annotations

import os

from . import _kernel_py

_requested = os.environ.get("LSASIM_BACKEND", "").strip().lower()

if _requested == "python":
    _impl = _kernel_py
    ACTIVE = "python"
else:
    try:
        from . import _kernel as _impl  # type: ignore[no-redef]

        ACTIVE = "cython"
    except ImportError:
        if _requested == "cython":
            raise ImportError(
                "LSASIM_BACKEND=cython requested but the compiled kernel is "
                "not available; build it with `pip install -e . --no-build-isolation`"
            )
        _impl = _kernel_py
        ACTIVE = "python"


def active_backend() -> str:
    """Name of the stepping backend selected at import time."""
    return ACTIVE


make_state = _impl.make_state
step = _impl.step
counters = _impl.counters
reset_counters = _impl.reset_counters
