"""Backend selection for the per-firm hot loops.

The numba backend is used when numba imports cleanly; set
``PRODSIM_NO_NUMBA=1`` to force the pure-numpy path. Both expose the same
functions and produce bit-identical results.
"""

from __future__ import annotations

import os
from types import ModuleType

from ._common import EVENT_NAMES, N_EVENTS  # noqa: F401

_FLAG = "PRODSIM_NO_NUMBA"


def numba_disabled() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() not in ("", "0", "false", "no")


def get_backend(name: str | None = None) -> ModuleType:
    """Return the kernel module for ``name`` ("numba" or "numpy"); default per env flag."""
    if name is None:
        name = "numpy" if numba_disabled() else "numba"
    if name == "numpy":
        from . import _numpy

        return _numpy
    if name == "numba":
        try:
            from . import _numba
        except ImportError:  # pragma: no cover - numba is a declared dependency
            from . import _numpy

            return _numpy
        return _numba
    raise ValueError(f"unknown kernel backend {name!r}")
