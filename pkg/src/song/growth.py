"""Growth of new coding vectors where the accumulated quantization error is high."""
import warnings

import numpy as np
from numba import njit

from .model import ValidationError


class CapacityWarning(UserWarning):
    """Growth was requested while the model was already at ``max_nodes``."""


@njit(cache=True)
def grow_kernel(C, E, Y, G, n, x, nbr_idx, include_input):
    """Insert node ``n`` at the centroid of the neighbour set; buffers must have room.

    Edges: every member of the neighbour set points to the new node, and the
    new node points to every current symmetric neighbour of the winner.
    """
    i1 = nbr_idx[0]
    m = nbr_idx.shape[0]
    D = C.shape[1]
    d = Y.shape[1]
    for t in range(D):
        s = 0.0
        for l in range(m):
            s += C[nbr_idx[l], t]
        if include_input:
            C[n, t] = (s + x[t]) / (m + 1)
        else:
            C[n, t] = s / m
    for t in range(d):
        s = 0.0
        for l in range(m):
            s += Y[nbr_idx[l], t]
        Y[n, t] = s / m
    for j in range(n + 1):
        E[n, j] = 0.0
        E[j, n] = 0.0
    for j in range(n):
        if j != i1 and (E[i1, j] > 0.0 or E[j, i1] > 0.0):
            E[n, j] = 1.0
    for l in range(m):
        E[nbr_idx[l], n] = 1.0
    G[n] = 0.0
    G[i1] = 0.0
    return n


def accumulate_growth(model, i1, dist):
    """Add ``dist`` to the growth error of node ``i1`` and return the new value."""
    if dist < 0:
        raise ValidationError("distance must be nonnegative")
    model._G[i1] += dist
    return float(model._G[i1])


def _ensure_capacity(model, needed):
    C, E, Y, G = model._buffers()
    cap = C.shape[0]
    if needed <= cap:
        return
    new_cap = min(max(needed, 2 * cap), model.hyper.max_nodes)
    n = model.n_nodes
    C2 = np.zeros((new_cap, C.shape[1]))
    C2[:n] = C[:n]
    Y2 = np.zeros((new_cap, Y.shape[1]))
    Y2[:n] = Y[:n]
    E2 = np.zeros((new_cap, new_cap))
    E2[:n, :n] = E[:n, :n]
    G2 = np.zeros(new_cap)
    G2[:n] = G[:n]
    model._set_buffers(C2, E2, Y2, G2, n)


def grow(model, x, neighbors):
    """Insert a coding vector and embedding row at the neighbourhood centroid.

    Returns the index of the new node, or ``None`` (with a
    :class:`CapacityWarning`) when the model already holds ``max_nodes``.
    """
    n = model.n_nodes
    if n >= model.hyper.max_nodes:
        warnings.warn(f"model is at capacity ({n} nodes); growth skipped", CapacityWarning)
        return None
    _ensure_capacity(model, n + 1)
    x = np.ascontiguousarray(x, dtype=np.float64)
    idx = np.ascontiguousarray(neighbors.indices, dtype=np.int64)
    C, E, Y, G = model._buffers()
    grow_kernel(C, E, Y, G, n, x, idx, bool(model.hyper.centroid_includes_input))
    model.n_nodes = n + 1
    return n
