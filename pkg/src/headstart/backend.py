"""Select the training-kernel backend.

The environment variable ``HEADSTART_BACKEND`` picks the implementation at
import time:

* ``auto`` (default): numba when importable, else pure numpy
* ``numba``: require the compiled kernels, fail if numba is unavailable
* ``numpy``: force the pure-numpy kernels

``use()`` switches the active module at runtime (tests and benchmarks).
Randomness never lives in the kernels, so both backends consume identical
RNG streams.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_numpy

CHOICES = ("auto", "numba", "numpy")
ENV_VAR = "HEADSTART_BACKEND"


def load_kernels(choice: str = "auto") -> ModuleType:
    """Return the kernel module for ``choice`` (see module docstring)."""
    if choice not in CHOICES:
        raise ValueError(f"backend must be one of {CHOICES}, got {choice!r}")
    if choice == "numpy":
        return _kernels_numpy
    try:
        from . import _kernels_numba
        return _kernels_numba
    except ImportError:
        if choice == "numba":
            raise
        return _kernels_numpy


kernels: ModuleType = load_kernels(os.environ.get(ENV_VAR, "auto").lower())


def use(choice: str) -> ModuleType:
    """Switch the active backend; returns the kernel module now in use."""
    global kernels
    kernels = load_kernels(choice)
    return kernels


def active_name() -> str:
    return kernels.NAME
