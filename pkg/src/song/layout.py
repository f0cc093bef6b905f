"""Embedding layout: attraction along graph edges, repulsion from sampled non-edges.

The low-dimensional similarity is the rational quadratic kernel
``q = 1 / (1 + a * dist^(2b))``. Attraction descends ``-e_hat * log(q)``,
repulsion descends ``-log(1 - q)``; only the neighbour ``y_j`` is moved.
"""
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _rng
from .edges import sym_neighbors_kernel
from .model import ValidationError


@dataclass(frozen=True)
class KernelParams:
    a: float = 1.577
    b: float = 0.895

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValidationError("kernel parameters a and b must be positive")


def kernel_q(y1, y2, kp=KernelParams()):
    diff = np.asarray(y1, dtype=np.float64) - np.asarray(y2, dtype=np.float64)
    d2 = float(diff @ diff)
    return 1.0 / (1.0 + kp.a * d2 ** kp.b)


@njit(cache=True)
def attraction_coef(d2, e_hat, a, b, dist_floor):
    floor2 = dist_floor * dist_floor
    if d2 < floor2:
        d2 = floor2
    return 2.0 * a * b * e_hat * d2 ** (b - 1.0) / (1.0 + a * d2 ** b)


@njit(cache=True)
def repulsion_coef(d2, a, b, dist_floor):
    floor2 = dist_floor * dist_floor
    if d2 < floor2:
        d2 = floor2
    return 2.0 * b / (d2 * (1.0 + a * d2 ** b))


@njit(cache=True)
def _clip(v, c):
    if v > c:
        return c
    if v < -c:
        return -c
    return v


@njit(cache=True)
def attract_kernel(Y, i1, j, e_hat, alpha, a, b, dist_floor, clip):
    d = Y.shape[1]
    d2 = 0.0
    for t in range(d):
        diff = Y[i1, t] - Y[j, t]
        d2 += diff * diff
    coef = attraction_coef(d2, e_hat, a, b, dist_floor)
    for t in range(d):
        Y[j, t] += alpha * _clip(coef * (Y[i1, t] - Y[j, t]), clip)


@njit(cache=True)
def repulse_kernel(Y, i1, j, alpha, a, b, dist_floor, clip, rng_state):
    d = Y.shape[1]
    d2 = 0.0
    for t in range(d):
        diff = Y[j, t] - Y[i1, t]
        d2 += diff * diff
    if d2 > 0.0:
        coef = repulsion_coef(d2, a, b, dist_floor)
        for t in range(d):
            Y[j, t] += alpha * _clip(coef * (Y[j, t] - Y[i1, t]), clip)
        return
    # coincident pair: push along a random direction at the clamped distance
    u = np.empty(d)
    norm = 0.0
    while norm == 0.0:
        norm = 0.0
        for t in range(d):
            u[t] = _rng.normal(rng_state)
            norm += u[t] * u[t]
    norm = np.sqrt(norm)
    coef = repulsion_coef(0.0, a, b, dist_floor)
    for t in range(d):
        Y[j, t] += alpha * _clip(coef * dist_floor * u[t] / norm, clip)


@njit(cache=True)
def layout_list_kernel(Y, E, n, i1, nbrs, na, alpha, a, b, neg_rate, dist_floor, clip,
                       rng_state, pool_buf, mark):
    """Layout pass around ``i1`` given its ``na`` ascending symmetric neighbours.

    ``mark`` is a zeroed byte buffer of length >= n and is left zeroed.
    Returns (attractions, repulsions).
    """
    for s in range(na):
        j = nbrs[s]
        e_hat = 0.5 * (E[i1, j] + E[j, i1])
        attract_kernel(Y, i1, j, e_hat, alpha, a, b, dist_floor, clip)
        mark[j] = 1
    mark[i1] = 1
    npool = 0
    for j in range(n):
        if mark[j] == 0:
            pool_buf[npool] = j
            npool += 1
    for s in range(na):
        mark[nbrs[s]] = 0
    mark[i1] = 0
    ns = neg_rate * na
    if ns > npool:
        ns = npool
    # partial Fisher-Yates: uniform sample without replacement from the pool
    for s in range(ns):
        r = s + _rng.randint(rng_state, npool - s)
        tmp = pool_buf[s]
        pool_buf[s] = pool_buf[r]
        pool_buf[r] = tmp
        repulse_kernel(Y, i1, pool_buf[s], alpha, a, b, dist_floor, clip, rng_state)
    return na, ns


@njit(cache=True)
def layout_kernel(Y, E, n, i1, alpha, a, b, neg_rate, dist_floor, clip, rng_state, nbr_buf, pool_buf):
    """One local layout pass around ``i1``; returns (attractions, repulsions)."""
    na = sym_neighbors_kernel(E, n, i1, nbr_buf)
    mark = np.zeros(n, np.uint8)
    return layout_list_kernel(Y, E, n, i1, nbr_buf, na, alpha, a, b, neg_rate, dist_floor,
                              clip, rng_state, pool_buf, mark)


def attraction_gradient(y_i1, y_j, e_hat, a, b, dist_floor=1e-3):
    """Gradient of ``-e_hat * log(q(y_i1, y_j))`` with respect to ``y_j``."""
    y_i1 = np.asarray(y_i1, dtype=np.float64)
    y_j = np.asarray(y_j, dtype=np.float64)
    diff = y_j - y_i1
    return attraction_coef(float(diff @ diff), e_hat, a, b, dist_floor) * diff


def repulsion_gradient(y_i1, y_j, a, b, dist_floor=1e-3):
    """Gradient of ``-log(1 - q(y_i1, y_j))`` with respect to ``y_j``."""
    y_i1 = np.asarray(y_i1, dtype=np.float64)
    y_j = np.asarray(y_j, dtype=np.float64)
    diff = y_j - y_i1
    return -repulsion_coef(float(diff @ diff), a, b, dist_floor) * diff


def _check_pair(model, i1, j):
    n = model.n_nodes
    if not (0 <= i1 < n and 0 <= j < n):
        raise ValidationError("node index out of range")
    if i1 == j:
        raise ValidationError("attraction and repulsion need two distinct nodes")


def attract(model, i1, j, e_hat, alpha):
    """Pull ``y_j`` towards ``y_i1``; returns the displacement applied."""
    _check_pair(model, i1, j)
    h = model.hyper
    before = model._Y[j].copy()
    attract_kernel(model._Y, i1, j, float(e_hat), float(alpha), h.a, h.b, h.dist_floor, h.grad_clip)
    return model._Y[j] - before


def repulse(model, i1, j, alpha):
    """Push ``y_j`` away from ``y_i1``; returns the displacement applied."""
    _check_pair(model, i1, j)
    h = model.hyper
    before = model._Y[j].copy()
    repulse_kernel(model._Y, i1, j, float(alpha), h.a, h.b, h.dist_floor, h.grad_clip,
                   model.rng_state)
    return model._Y[j] - before


def layout_step(model, i1, alpha):
    """Attract every graph neighbour of ``i1`` then repel sampled non-neighbours.

    Returns ``(attractions, repulsions)``.
    """
    n = model.n_nodes
    if not 0 <= i1 < n:
        raise ValidationError("node index out of range")
    h = model.hyper
    na, nr = layout_kernel(model._Y, model._E, n, int(i1), float(alpha), h.a, h.b,
                           int(h.neg_rate), h.dist_floor, h.grad_clip, model.rng_state,
                           np.empty(n, np.int64), np.empty(n, np.int64))
    return int(na), int(nr)


def cross_entropy(embedding, edges_sym, a, b, eps=1e-12):
    """Total ``sum -p log q - (1 - p) log(1 - q)`` over ordered pairs ``i != j``."""
    Y = np.asarray(embedding, dtype=np.float64)
    P = np.asarray(edges_sym, dtype=np.float64)
    d2 = ((Y[:, None, :] - Y[None, :, :]) ** 2).sum(-1)
    q = 1.0 / (1.0 + a * d2 ** b)
    q = np.clip(q, eps, 1.0 - eps)
    ce = -P * np.log(q) - (1.0 - P) * np.log(1.0 - q)
    np.fill_diagonal(ce, 0.0)
    return float(ce.sum())
