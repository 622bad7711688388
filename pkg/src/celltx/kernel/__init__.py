"""Hot numeric core: best-server SINR and assignment-throughput kernels.

Two interchangeable backends expose the same two entry points: a Cython
extension (``_native``) and a NumPy reference (``pyref``).  The
extension is preferred when it is importable; set ``CELLTX_KERNEL`` to
``python`` or ``native`` to force one.
"""

import importlib
import os

from . import pyref

_choice = os.environ.get("CELLTX_KERNEL", "auto").lower()
if _choice not in ("auto", "native", "python"):
    raise ValueError(f"unrecognized CELLTX_KERNEL value: {_choice!r}")

_native = None
if _choice in ("auto", "native"):
    try:
        _native = importlib.import_module("._native", __name__)
    except ImportError:
        _native = None
    if _choice == "native" and _native is None:
        raise ImportError("CELLTX_KERNEL=native but the compiled kernel is not built")

active = _native if _native is not None else pyref
BACKEND = "native" if _native is not None else "python"

best_server_sinr = active.best_server_sinr
assignment_throughput = active.assignment_throughput
efficiency = pyref.efficiency
