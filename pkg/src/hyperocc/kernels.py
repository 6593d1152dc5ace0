"""Kernel backend selection.

The compiled extension is used when it is importable; setting
``HYPEROCC_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from . import _kernels_py

if os.environ.get("HYPEROCC_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"
    else:
        BACKEND = "cython"

propagate_nodes = _impl.propagate_nodes
coverage_d = _impl.coverage_d


def backends():
    """Map of every importable backend name to its module."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        found["cython"] = _kernels
    return found
