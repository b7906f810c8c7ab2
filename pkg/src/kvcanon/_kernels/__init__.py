"""Kernel selection: compiled extension when built, pure Python otherwise.

Set KVCANON_PURE_PYTHON=1 to force the fallback (used by the benchmark and to
cross-check the two implementations).
"""

from __future__ import annotations

import os

from . import _decode_py

if os.environ.get("KVCANON_PURE_PYTHON", "") not in ("", "0"):
    decode_best_span = _decode_py.decode_best_span
    KERNEL_BACKEND = "python"
else:
    try:
        from ._decode import decode_best_span  # type: ignore[no-redef]

        KERNEL_BACKEND = "compiled"
    except ImportError:
        decode_best_span = _decode_py.decode_best_span
        KERNEL_BACKEND = "python"

__all__ = ["decode_best_span", "KERNEL_BACKEND", "_decode_py"]
