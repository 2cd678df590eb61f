"""Pick the Keccak kernel backend at import time.

The compiled extension is preferred; set ``HUFFREV_PURE_PYTHON=1`` to force
the pure-Python fallback (useful for debugging and for the benchmark).
"""

from __future__ import annotations

import os

from . import _pykeccak

if os.environ.get("HUFFREV_PURE_PYTHON"):
    kernel = _pykeccak
    BACKEND = "python"
else:
    try:
        from . import _ckeccak as kernel  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        kernel = _pykeccak
        BACKEND = "python"

permute = kernel.permute
absorb_blocks = kernel.absorb_blocks
duplex_chain = kernel.duplex_chain

__all__ = ["BACKEND", "absorb_blocks", "duplex_chain", "kernel", "permute"]
