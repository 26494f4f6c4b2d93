"""Hot-kernel selector.

Imports the compiled extension when available, falling back to the pure
Python twin. Set CLOUDBURST_PURE=1 to force the fallback (used by the
parity tests and the benchmark). Both implementations are bit-for-bit
interchangeable, so which one loads never affects simulation output —
only speed.
"""

from __future__ import annotations

import logging
import os

logger = logging.getLogger(__name__)

if os.environ.get("CLOUDBURST_PURE"):
    from cloudburst import _kernels_py as _impl
else:
    try:
        from cloudburst import _kernels_c as _impl  # type: ignore[no-redef]
    except ImportError:
        from cloudburst import _kernels_py as _impl  # type: ignore[no-redef]
        logger.debug("compiled kernels unavailable; using pure-Python fallback")

IMPLEMENTATION: str = _impl.IMPLEMENTATION
MASK64: int = _impl.MASK64

fnv1a64 = _impl.fnv1a64
sm64_next = _impl.sm64_next
sm64_double = _impl.sm64_double
sample_hits = _impl.sample_hits
accrue_span = _impl.accrue_span
drop_time = _impl.drop_time

__all__ = [
    "IMPLEMENTATION",
    "MASK64",
    "fnv1a64",
    "sm64_next",
    "sm64_double",
    "sample_hits",
    "accrue_span",
    "drop_time",
]
