# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Brute-force k-nearest-neighbour search, the O(N^2) hot loop.

Matches the arithmetic of the NumPy fallback exactly: squared Euclidean
distance accumulated as dx*dx + dy*dy + dz*dz, self excluded, ties broken
by lower point index.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def knn_indices(double[:, ::1] xyz, Py_ssize_t k):
    """Indices of the k nearest other points, shape (N, k), int64.

    Rows are sorted by (distance, index) ascending.  k must satisfy
    0 <= k <= N - 1; clamping is the caller's job.
    """
    cdef Py_ssize_t n = xyz.shape[0]
    if xyz.shape[1] != 3:
        raise ValueError("xyz must have shape (N, 3)")
    if k < 0 or k > n - 1:
        raise ValueError(f"k={k} out of range for N={n}")

    out_arr = np.empty((n, k), dtype=np.int64)
    if k == 0:
        return out_arr

    cdef long long[:, ::1] out = out_arr
    cdef double[::1] best_d = np.empty(k, dtype=np.float64)
    cdef long long[::1] best_i = np.empty(k, dtype=np.int64)
    cdef Py_ssize_t i, j, m, pos, filled
    cdef double dx, dy, dz, d

    for i in range(n):
        filled = 0
        for j in range(n):
            if j == i:
                continue
            dx = xyz[i, 0] - xyz[j, 0]
            dy = xyz[i, 1] - xyz[j, 1]
            dz = xyz[i, 2] - xyz[j, 2]
            d = dx * dx + dy * dy + dz * dz
            if filled < k:
                pos = filled
                filled += 1
            elif d >= best_d[k - 1]:
                # equal distances keep the earlier (lower-index) entry
                continue
            else:
                pos = k - 1
            while pos > 0 and best_d[pos - 1] > d:
                best_d[pos] = best_d[pos - 1]
                best_i[pos] = best_i[pos - 1]
                pos -= 1
            best_d[pos] = d
            best_i[pos] = j
        for m in range(k):
            out[i, m] = best_i[m]
    return out_arr
