"""Exact k-nearest coding vector search.

Coding vectors move on every training step, so a brute-force scan over the
(small) coding vector matrix is cheaper than maintaining any spatial index.
"""
import numpy as np
from numba import njit

from .model import NeighborSet, ValidationError


# fastmath lets the distance reduction vectorize; the scan dominates training time
@njit(cache=True, fastmath=True)
def knn_kernel(C, n, x, k):
    """Indices and squared distances of the ``min(k, n)`` rows of ``C[:n]``
    closest to ``x``, ascending, ties broken towards the lower index."""
    m = min(k, n)
    D = x.shape[0]
    idx = np.empty(m, np.int64)
    best = np.empty(m)
    cnt = 0
    for i in range(n):
        s = 0.0
        for t in range(D):
            diff = x[t] - C[i, t]
            s += diff * diff
        if cnt < m:
            p = cnt
            cnt += 1
        elif s < best[m - 1]:
            p = m - 1
        else:
            continue
        # strict comparison keeps earlier indices ahead of equal distances
        while p > 0 and s < best[p - 1]:
            best[p] = best[p - 1]
            idx[p] = idx[p - 1]
            p -= 1
        best[p] = s
        idx[p] = i
    return idx, best


def nearest_coding_vectors(model, x, k=None):
    """Return the :class:`NeighborSet` of ``x`` among the model's coding vectors."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (model.input_dim,):
        raise ValidationError(f"query has shape {x.shape}, model expects ({model.input_dim},)")
    k = model.k if k is None else int(k)
    if k < 1:
        raise ValidationError("k must be at least 1")
    idx, d2 = knn_kernel(model._C, model.n_nodes, x, k)
    return NeighborSet(idx, np.sqrt(d2))
