"""Kernel backend selection.

The compiled extension is used when it imports; setting ``RIS_PURE_PYTHON=1``
forces the numpy fallback.  ``BACKEND`` names the active one.
"""
from __future__ import annotations

import os

from . import _kernels_py as python_backend

try:
    if os.environ.get("RIS_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _kernels as compiled_backend
except ImportError:
    compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "compiled" if compiled_backend is not None else "python"

envelope_sweep = _active.envelope_sweep
rasterize_quads = _active.rasterize_quads
rasterize_tets = _active.rasterize_tets
