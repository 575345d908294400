"""Select the kernel implementation at import time.

The compiled ``_core`` extension is used when it is importable; setting
``VCSELRNG_PURE_PYTHON=1`` forces the pure-Python fallback.
"""

import os

from . import _purepy

if os.environ.get("VCSELRNG_PURE_PYTHON", "") not in ("", "0"):
    kernels = _purepy
    BACKEND = "python"
else:
    try:
        from . import _core as kernels
        BACKEND = "cython"
    except ImportError:  # extension not built
        kernels = _purepy
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
