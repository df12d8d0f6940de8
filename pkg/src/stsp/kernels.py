"""Kernel selection: the compiled extension if importable, else pure Python.

Set ``STSP_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
min_edge_uses = _pykernels.min_edge_uses

if os.environ.get("STSP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        min_edge_uses = _ckernels.min_edge_uses
        BACKEND = "cython"

__all__ = ["BACKEND", "min_edge_uses"]
