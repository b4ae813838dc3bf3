"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the NumPy
fallback. Set ``ECGARRHYTHMIA_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

fallback = _fallback

if os.environ.get("ECGARRHYTHMIA_PURE_PYTHON", "") not in ("", "0"):
    compiled = None
else:
    try:
        from . import _kernels as compiled
    except ImportError:  # extension not built
        compiled = None

_impl = compiled if compiled is not None else fallback
BACKEND = "cython" if compiled is not None else "python"

approx_entropy = _impl.approx_entropy
sample_entropy_counts = _impl.sample_entropy_counts
best_split = _impl.best_split
