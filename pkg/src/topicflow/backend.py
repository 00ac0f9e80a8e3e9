"""Kernel backend selection.

The compiled extension is preferred; the pure-Python twin is the fallback.
Both expose the same functions and, by construction, the same random stream,
so the choice never changes results - only speed. Override with
TOPICFLOW_KERNELS=python|cython (useful for benchmarks and CI).
"""

from __future__ import annotations

import os
import warnings

from . import _kernels_py


def load_backend(name: str):
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels  # raises ImportError when not built
        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")


def _select():
    forced = os.environ.get("TOPICFLOW_KERNELS")
    if forced:
        return load_backend(forced)
    try:
        return load_backend("cython")
    except ImportError:
        warnings.warn("compiled kernels unavailable; falling back to the "
                      "pure-Python Gibbs kernels (slow)", RuntimeWarning)
        return _kernels_py


kernels = _select()
BACKEND = kernels.BACKEND_NAME
