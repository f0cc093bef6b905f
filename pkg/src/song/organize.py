"""Self-organization of coding vectors towards a sampled input."""
import numpy as np
from numba import njit

from .edges import sym_neighbors_kernel
from .model import ValidationError


@njit(cache=True)
def organize_list_kernel(C, x, i1, nbrs, cnt, sigma2, alpha, dist_floor):
    """Move the winner and the ``cnt`` listed neighbours towards ``x``.

    Each selected ``c`` moves by ``alpha * (x - c) * exp(-||x - c||^2 / sigma2)``,
    the descent direction of the exponential-kernel loss with the k-th
    neighbour distance ``sigma2`` held fixed. Every update depends only on its
    own vector, so the result does not depend on visiting order.
    """
    floor2 = dist_floor * dist_floor
    if sigma2 < floor2:
        sigma2 = floor2
    D = x.shape[0]
    for s in range(cnt + 1):
        j = i1 if s == cnt else nbrs[s]
        d2 = 0.0
        for t in range(D):
            diff = x[t] - C[j, t]
            d2 += diff * diff
        h = alpha * np.exp(-d2 / sigma2)
        for t in range(D):
            C[j, t] += h * (x[t] - C[j, t])
    return cnt + 1


@njit(cache=True)
def organize_kernel(C, E, n, x, i1, sigma2, alpha, dist_floor):
    """:func:`organize_list_kernel` with the neighbours of ``i1`` read from ``E``."""
    nbrs = np.empty(max(n, 1), np.int64)
    cnt = sym_neighbors_kernel(E, n, i1, nbrs)
    return organize_list_kernel(C, x, i1, nbrs, cnt, sigma2, alpha, dist_floor)


def self_organizing_step(x, c, sigma2):
    """Update direction ``(x - c) * exp(-||x - c||^2 / sigma2)`` for one vector."""
    x = np.asarray(x, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    diff = x - c
    return diff * np.exp(-diff @ diff / sigma2)


def organize_coding_vectors(model, x, neighbors, alpha):
    """Self-organize the winner of ``neighbors`` and its graph neighbours.

    Returns the number of coding vectors that were moved.
    """
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (model.input_dim,):
        raise ValidationError(f"query has shape {x.shape}, model expects ({model.input_dim},)")
    sigma2 = float(neighbors.distances[-1]) ** 2
    return int(organize_kernel(model._C, model._E, model.n_nodes, x, int(neighbors.indices[0]),
                               sigma2, float(alpha), model.hyper.dist_floor))
