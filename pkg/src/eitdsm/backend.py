"""Kernel backend selection.

The package ships two implementations of its hot kernels: a compiled Cython
extension and a pure numpy fallback.  The extension is preferred when it
imports cleanly; set EITDSM_BACKEND=numpy or EITDSM_BACKEND=cython to force a
choice (forcing cython raises if the extension is missing).  The choice is
made once at import time so a whole run uses a single backend, which keeps
reruns bit-reproducible.
"""

import os

from . import kernels_numpy

name = "numpy"
_impl = kernels_numpy

_requested = os.environ.get("EITDSM_BACKEND", "").strip().lower()
if _requested not in ("", "numpy", "cython"):
    raise ValueError(f"unknown EITDSM_BACKEND value {_requested!r}")
if _requested in ("", "cython"):
    try:
        from . import _kernels as _ext
    except ImportError:
        if _requested == "cython":
            raise ImportError(
                "EITDSM_BACKEND=cython but the compiled extension is not available; "
                "build it with 'pip install -e .' or drop the override"
            )
    else:
        name = "cython"
        _impl = _ext

cg_solve = _impl.cg_solve
maxpool2_fwd = _impl.maxpool2_fwd
maxpool2_bwd = _impl.maxpool2_bwd
fv_matvec = _impl.fv_matvec
