"""Kernel backend selection.

Imports the compiled extension when present, falling back to the pure-Python
twin otherwise. ``SARMISSION_PURE=1`` forces the fallback (used by the
benchmark to compare both backends).
"""

from __future__ import annotations

import os

if os.environ.get("SARMISSION_PURE"):
    from . import _pure as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _pure as _impl

BACKEND: str = _impl.BACKEND
multiplicative_update = _impl.multiplicative_update
entropy_norm = _impl.entropy_norm
advance_along_path = _impl.advance_along_path
mark_disk = _impl.mark_disk
path_length = _impl.path_length

__all__ = [
    "BACKEND",
    "multiplicative_update",
    "entropy_norm",
    "advance_along_path",
    "mark_disk",
    "path_length",
]
