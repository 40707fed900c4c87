"""Kernel backend selection.

Two interchangeable implementations of the frontier-extension kernels:

- numba: jit-compiled loops with real CPU atomics, GIL released, the
  default when numba imports cleanly.
- numpy: vectorized batch operations; correct under the engine's
  per-morsel serialization (NEEDS_MORSEL_LOCK), useful where numba is
  unavailable and as an independent cross-check.

The default comes from the IFEKIT_BACKEND environment variable
("auto" | "numba" | "numpy"); QuerySpec.backend and the CLI --backend flag
override it per run.
"""

from __future__ import annotations

import os

BACKENDS = ("auto", "numba", "numpy")


def select(name=None):
    """Return the backend module for `name` (or the environment default)."""
    name = name or os.environ.get("IFEKIT_BACKEND", "auto")
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")
    if name == "numpy":
        from . import numpy_backend

        return numpy_backend
    if name == "numba":
        from . import numba_backend

        return numba_backend
    try:
        from . import numba_backend

        return numba_backend
    except ImportError:
        from . import numpy_backend

        return numpy_backend
