"""Kernel backend selection.

The compiled ``_core`` extension is used when it imports; otherwise the numpy
fallback. Setting ``UWSI_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if not os.environ.get("UWSI_PURE_PYTHON"):
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback

tv_convolve = _impl.tv_convolve
ls_run = _impl.ls_run


def backend(name: str):
    """Return the kernel module for ``"compiled"`` or ``"python"``."""
    if name == "python":
        return _fallback
    if name == "compiled":
        from . import _core

        return _core
    raise ValueError(f"unknown backend {name!r}")


def thread_count() -> int:
    """Worker threads for parallel stages, from ``UWSI_THREADS`` (default 1)."""
    raw = os.environ.get("UWSI_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
