"""Select the compiled kernels when available, else the numpy fallback.

Set ``DIVSEL_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

kernels = _pykernels
COMPILED = False

if os.environ.get("DIVSEL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as kernels  # noqa: F811
        COMPILED = True
    except ImportError:
        pass

BACKEND = "compiled" if COMPILED else "python"
