"""NumPy fallback for the k-NN kernel.

Same contract and the same floating-point arithmetic as the compiled
version: squared distances via elementwise differences (dx^2+dy^2)+dz^2,
stable sort so exact ties resolve to the lower index.  Row blocks keep the
N x N distance matrix out of memory.
"""

from __future__ import annotations

import numpy as np

_BLOCK = 256


def knn_indices(xyz: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest other points, shape (N, k), int64."""
    xyz = np.ascontiguousarray(xyz, dtype=np.float64)
    if xyz.ndim != 2 or xyz.shape[1] != 3:
        raise ValueError("xyz must have shape (N, 3)")
    n = xyz.shape[0]
    if k < 0 or k > n - 1:
        raise ValueError(f"k={k} out of range for N={n}")
    out = np.empty((n, k), dtype=np.int64)
    if k == 0:
        return out
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        diff = xyz[start:stop, None, :] - xyz[None, :, :]
        d2 = (diff * diff).sum(axis=2)
        d2[np.arange(start, stop) - start, np.arange(start, stop)] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")
        out[start:stop] = order[:, :k]
    return out
