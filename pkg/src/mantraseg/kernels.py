"""Kernel selection: compiled extension when available, NumPy otherwise.

Set MANTRASEG_NO_EXT=1 to force the fallback (used by the benchmark and the
cross-implementation tests).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("MANTRASEG_NO_EXT"):
    _impl = _kernels_py
    HAVE_EXT = False
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        HAVE_EXT = True
    except ImportError:
        _impl = _kernels_py
        HAVE_EXT = False

knn_indices = _impl.knn_indices
knn_indices_py = _kernels_py.knn_indices
