"""Select the compiled kernels when available, else the numpy fallback.

Set ``PEAKREG_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)

_compiled = None
if not os.environ.get("PEAKREG_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError as exc:  # extension not built
        log.debug("compiled kernels unavailable (%s); using numpy fallback", exc)
        _compiled = None

active = _compiled if _compiled is not None else _kernels_py
BACKEND: str = active.BACKEND

iterate = active.iterate
joint_control = active.joint_control

OPTIMAL = _kernels_py.OPTIMAL
UNBOUNDED = _kernels_py.UNBOUNDED
ITER_LIMIT = _kernels_py.ITER_LIMIT
BASIC = _kernels_py.BASIC
AT_LOWER = _kernels_py.AT_LOWER
AT_UPPER = _kernels_py.AT_UPPER
FREE = _kernels_py.FREE
FIXED = _kernels_py.FIXED


def get(backend: str | None = None):
    """Return a kernel module by name: 'cython', 'python' or None for the active one."""
    if backend is None:
        return active
    if backend == "python":
        return _kernels_py
    if backend == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown kernel backend {backend!r}")


def compiled_available() -> bool:
    return _compiled is not None
