"""Training loop: epochs of edge curation, self-organization, layout and growth."""
import logging
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from numba import njit

from . import _rng
from .edges import curate_kernel
from .growth import CapacityWarning, grow_kernel
from .layout import layout_list_kernel
from .model import ValidationError, as_data, quantization_error
from .neighbors import knn_kernel
from .organize import organize_list_kernel

log = logging.getLogger(__name__)

# slots of the per-epoch statistics vector filled by the kernel
_CHANGED, _GROWN, _SKIPPED, _SUM_DIST, _SUM_QE, _ATTR, _REP = range(7)


class TrainingError(RuntimeError):
    """Training produced a non-finite model state."""


@dataclass
class TrainReport:
    epochs_run: int = 0
    terminated_early: bool = False
    edge_changes_per_epoch: List[int] = field(default_factory=list)
    growth_per_epoch: List[int] = field(default_factory=list)
    alpha_per_epoch: List[float] = field(default_factory=list)
    mean_qe_per_epoch: List[float] = field(default_factory=list)
    stable_samples_per_epoch: List[int] = field(default_factory=list)
    growth_events: int = 0
    growth_skipped: int = 0
    final_qe: float = 0.0
    final_alpha: float = 0.0
    n_nodes: int = 0
    theta_g: Optional[float] = None

    def as_lines(self):
        """``key=value`` lines for command line reports."""
        return [
            f"epochs_run={self.epochs_run}",
            f"terminated_early={str(self.terminated_early).lower()}",
            f"growth_events={self.growth_events}",
            f"growth_skipped={self.growth_skipped}",
            f"n_nodes={self.n_nodes}",
            f"final_qe={self.final_qe:.10g}",
            f"final_alpha={self.final_alpha:.10g}",
            f"theta_g={'' if self.theta_g is None else format(self.theta_g, '.10g')}",
            "edge_changes_per_epoch=" + ",".join(str(c) for c in self.edge_changes_per_epoch),
        ]


@njit(cache=True)
def _grow_buffers(C, E, Y, G, n, new_cap):
    C2 = np.zeros((new_cap, C.shape[1]))
    Y2 = np.zeros((new_cap, Y.shape[1]))
    E2 = np.zeros((new_cap, new_cap))
    G2 = np.zeros(new_cap)
    C2[:n] = C[:n]
    Y2[:n] = Y[:n]
    E2[:n, :n] = E[:n, :n]
    G2[:n] = G[:n]
    return C2, E2, Y2, G2


@njit(cache=True)
def _transpose(E, n):
    ET = np.zeros_like(E)
    for i in range(n):
        for j in range(n):
            ET[j, i] = E[i, j]
    return ET


@njit(cache=True)
def _epoch_kernel(X, C, E, Y, G, n, max_nodes, k, alpha, eps, e_min, theta_g, grow_enabled,
                  neg_rate, a, b, dist_floor, clip, include_input, rng_state, stats):
    N = X.shape[0]
    D = X.shape[1]
    order = _rng.permutation(rng_state, N)
    nbr_buf = np.empty(C.shape[0], np.int64)
    pool_buf = np.empty(C.shape[0], np.int64)
    live_buf = np.empty(C.shape[0], np.int64)
    mark = np.zeros(C.shape[0], np.uint8)
    # transposed copy so that in-edges of the winner are read along a row
    ET = _transpose(E, n)
    for s in range(N):
        x = X[order[s]]
        idx, d2 = knn_kernel(C, n, x, k)
        i1 = idx[0]
        nlive = 0
        for j in range(n):
            if E[i1, j] > 0.0:
                live_buf[nlive] = j
                nlive += 1
        _, _, _, changed = curate_kernel(E, n, i1, idx, eps, e_min)
        for l in range(nlive):
            ET[live_buf[l], i1] = E[i1, live_buf[l]]
        for l in range(idx.shape[0]):
            ET[idx[l], i1] = E[i1, idx[l]]
        if changed:
            stats[_CHANGED] += 1
        cnt = 0
        for j in range(n):
            if j != i1 and (E[i1, j] > 0.0 or ET[i1, j] > 0.0):
                nbr_buf[cnt] = j
                cnt += 1
        # curation is the only step that edits E, so one neighbour list serves both
        organize_list_kernel(C, x, i1, nbr_buf, cnt, d2[idx.shape[0] - 1], alpha, dist_floor)
        na, nr = layout_list_kernel(Y, E, n, i1, nbr_buf, cnt, alpha, a, b, neg_rate,
                                    dist_floor, clip, rng_state, pool_buf, mark)
        stats[_ATTR] += na
        stats[_REP] += nr
        q = 0.0
        for t in range(D):
            diff = x[t] - C[i1, t]
            q += diff * diff
        dist = np.sqrt(q)
        G[i1] += dist
        stats[_SUM_DIST] += dist
        stats[_SUM_QE] += 0.5 * q
        if grow_enabled and G[i1] > theta_g:
            if n >= max_nodes:
                stats[_SKIPPED] += 1
                continue
            if n == C.shape[0]:
                C, E, Y, G = _grow_buffers(C, E, Y, G, n, min(2 * n, max_nodes))
                nbr_buf = np.empty(C.shape[0], np.int64)
                pool_buf = np.empty(C.shape[0], np.int64)
                live_buf = np.empty(C.shape[0], np.int64)
                mark = np.zeros(C.shape[0], np.uint8)
                ET = _transpose(E, n)
            grow_kernel(C, E, Y, G, n, x, idx, include_input)
            for j in range(n + 1):
                ET[n, j] = E[j, n]
                ET[j, n] = E[n, j]
            n += 1
            stats[_GROWN] += 1
    return C, E, Y, G, n


def _effective_theta(model, n_rows):
    if model.theta_g is None:
        return None
    if model.hyper.scale_theta_g and model.theta_g_rows:
        return model.theta_g * n_rows / model.theta_g_rows
    return model.theta_g


def _train(model, X, alpha_0, callback=None):
    h = model.hyper
    N = X.shape[0]
    if model.theta_g is None and h.theta_g is not None:
        model.theta_g = float(h.theta_g)
        model.theta_g_rows = N
    adaptive = model.theta_g is None
    report = TrainReport(theta_g=_effective_theta(model, N))
    t_max = int(h.t_max)
    for t in range(t_max):
        alpha = alpha_0 * (1.0 - t / t_max)
        grow_enabled = model.theta_g is not None
        theta = _effective_theta(model, N) if grow_enabled else 0.0
        stats = np.zeros(7)
        C, E, Y, G = model._buffers()
        C, E, Y, G, n = _epoch_kernel(
            X, C, E, Y, G, model.n_nodes, int(h.max_nodes), int(model.k), float(alpha),
            float(h.epsilon_decay), float(h.e_min),
            float(theta), grow_enabled,
            int(h.neg_rate), float(h.a), float(h.b), float(h.dist_floor), float(h.grad_clip),
            bool(h.centroid_includes_input), model.rng_state, stats)
        model._set_buffers(C, E, Y, G, n)
        model.growth_error[:] *= h.growth_retention
        model.epoch += 1
        for arr in (model.coding_vectors, model.embedding, model.edges, model.growth_error):
            if not np.all(np.isfinite(arr)):
                raise TrainingError(
                    f"non-finite model state after epoch {t} (alpha={alpha:.4g}, "
                    f"n_nodes={model.n_nodes}); try a smaller alpha_0 or grad_clip")
        if adaptive and model.theta_g is None:
            mean_dist = stats[_SUM_DIST] / N
            model.theta_g = max(h.theta_g_factor * mean_dist, np.finfo(np.float64).tiny)
            model.theta_g_rows = N
            report.theta_g = model.theta_g
            log.debug("growth threshold set to %.6g", model.theta_g)
        changes = int(stats[_CHANGED] + stats[_GROWN])
        report.epochs_run = t + 1
        report.edge_changes_per_epoch.append(changes)
        report.growth_per_epoch.append(int(stats[_GROWN]))
        report.alpha_per_epoch.append(float(alpha))
        report.mean_qe_per_epoch.append(float(stats[_SUM_QE] / X.shape[0]))
        report.stable_samples_per_epoch.append(int(X.shape[0] - stats[_CHANGED]))
        report.growth_events += int(stats[_GROWN])
        report.growth_skipped += int(stats[_SKIPPED])
        report.final_alpha = float(alpha)
        report.n_nodes = model.n_nodes
        if callback is not None:
            callback(report)
        if changes == 0:
            report.terminated_early = t + 1 < t_max
            break
    if report.growth_skipped:
        warnings.warn(f"{report.growth_skipped} growth events skipped at max_nodes="
                      f"{h.max_nodes}", CapacityWarning)
    report.final_qe = quantization_error(model, X)
    report.n_nodes = model.n_nodes
    return report


def _check_training_data(model, data):
    data = as_data(data)
    if data.dim != model.input_dim:
        raise ValidationError(f"data has dimension {data.dim}, model expects {model.input_dim}")
    return data


def fit(model, data, callback=None):
    """Train ``model`` in place on ``data`` and return a :class:`TrainReport`.

    The learning rate decays linearly as ``alpha_0 * (1 - t / t_max)``; every
    epoch visits the rows in a fresh random order. Training stops early after
    an epoch in which no sample changed its winner's neighbour set and no node
    was grown.
    """
    data = _check_training_data(model, data)
    if data.n == 0:
        raise ValidationError("cannot fit on an empty dataset")
    model.reference_data = data.rows.copy()
    return _train(model, model.reference_data, model.hyper.alpha_0, callback)


def partial_fit(model, new_data, callback=None):
    """Continue training a fitted model after new rows arrive.

    Coding vectors, edges and embedding are kept as a warm start and the
    learning rate schedule restarts from ``alpha_0 * incremental_rate``,
    times the share of new rows in the epoch when ``incremental_share`` is
    set. With ``replay='union'``
    (default) the retained reference rows are trained together with the new
    ones; with ``replay='new'`` only the increment is used.
    """
    data = as_data(new_data)
    if data.n == 0:
        return TrainReport(n_nodes=model.n_nodes, theta_g=_effective_theta(model, 0),
                           final_qe=(quantization_error(model, model.reference_data)
                                     if len(model.reference_data) else 0.0))
    data = _check_training_data(model, data)
    union = np.concatenate([model.reference_data, data.rows])
    model.reference_data = union
    X = union if model.hyper.replay == "union" else data.rows
    h = model.hyper
    alpha_0 = h.alpha_0 * h.incremental_rate
    if h.incremental_share:
        alpha_0 *= data.n / X.shape[0]
    return _train(model, np.ascontiguousarray(X), alpha_0, callback)
