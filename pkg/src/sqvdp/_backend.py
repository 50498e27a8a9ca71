"""Select the kernel implementation at import time.

The compiled ``_kernels`` extension is used when it imports; otherwise the
pure-Python ``_fallback``. Set ``SQVDP_BACKEND=python`` to force the fallback.
"""
import os

from . import _fallback

python = _fallback

try:
    from . import _kernels as cython
except ImportError:  # extension not built
    cython = None

if cython is not None and os.environ.get("SQVDP_BACKEND", "").lower() != "python":
    kernels = cython
    NAME = "cython"
else:
    kernels = _fallback
    NAME = "python"


def available():
    """Names and modules of every importable backend."""
    out = {"python": _fallback}
    if cython is not None:
        out["cython"] = cython
    return out
