"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback is used.  ``HURSTWAVE_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels as python_backend
from ._pykernels import DEGENERATE, INSUFFICIENT_DOF, NOISE_DOMINATES, VALID

try:
    from . import _ckernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("HURSTWAVE_PURE_PYTHON", "") in ("", "0"):
    backend = compiled_backend
    BACKEND_NAME = "cython"
else:
    backend = python_backend
    BACKEND_NAME = "python"

dwt_step = backend.dwt_step
idwt_step = backend.idwt_step
pair_table = backend.pair_table

__all__ = [
    "BACKEND_NAME", "DEGENERATE", "INSUFFICIENT_DOF", "NOISE_DOMINATES", "VALID",
    "compiled_backend", "dwt_step", "idwt_step", "pair_table", "python_backend",
]
