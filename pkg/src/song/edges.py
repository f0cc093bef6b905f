"""Renewal, decay and pruning of the directed coding-vector graph."""
from dataclasses import dataclass

import numpy as np
from numba import njit


@dataclass
class EdgeUpdateOutcome:
    renewed: int
    decayed: int
    pruned: int
    neighbor_set_changed: bool


@njit(cache=True)
def curate_kernel(E, n, i1, nbr_idx, eps, e_min):
    """Update the outgoing edges of winner ``i1`` in place.

    Members of ``nbr_idx`` are renewed to 1, every other live outgoing edge
    is multiplied by ``eps`` and cut to 0 once below ``e_min``. Returns
    ``(renewed, decayed, pruned, changed)`` where ``changed`` tells whether
    the set of symmetric neighbours of ``i1`` differs afterwards.
    """
    renewed = 0
    decayed = 0
    pruned = 0
    changed = False
    m = nbr_idx.shape[0]
    for j in range(n):
        if j == i1:
            continue
        member = False
        for l in range(m):
            if nbr_idx[l] == j:
                member = True
                break
        old = E[i1, j]
        if member:
            E[i1, j] = 1.0
            renewed += 1
            # the reverse edge already made j a neighbour otherwise
            if old == 0.0 and E[j, i1] == 0.0:
                changed = True
        elif old > 0.0:
            new = old * eps
            decayed += 1
            if new < e_min:
                new = 0.0
                pruned += 1
                if E[j, i1] == 0.0:
                    changed = True
            E[i1, j] = new
    return renewed, decayed, pruned, changed


@njit(cache=True)
def sym_neighbors_kernel(E, n, i, out):
    """Write the ascending symmetric neighbours of ``i`` into ``out``; return their count."""
    cnt = 0
    for j in range(n):
        if j != i and (E[i, j] > 0.0 or E[j, i] > 0.0):
            out[cnt] = j
            cnt += 1
    return cnt


@njit(cache=True)
def sym_strength(E, i, j):
    return 0.5 * (E[i, j] + E[j, i])


def curate_edges(model, neighbors):
    """Apply one edge renewal/decay/pruning pass for the winner of ``neighbors``."""
    idx = np.ascontiguousarray(neighbors.indices, dtype=np.int64)
    r, d, p, changed = curate_kernel(model._E, model.n_nodes, int(idx[0]), idx,
                                     model.hyper.epsilon_decay, model.hyper.e_min)
    return EdgeUpdateOutcome(int(r), int(d), int(p), bool(changed))


def symmetrize(edges):
    """Symmetric edge strengths ``(E + E^T) / 2``; the input is left untouched."""
    edges = np.asarray(edges, dtype=np.float64)
    return (edges + edges.T) / 2.0


def neighbor_list(edges_sym, node):
    """Ascending indices ``j != node`` with positive symmetric strength."""
    row = np.asarray(edges_sym)[node]
    out = np.flatnonzero(row > 0)
    return out[out != node]
