"""Parametric state of a SONG model and the read-only mapping it defines."""
from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np
from numba import njit

from . import _rng


class ValidationError(ValueError):
    """Raised when inputs or hyperparameters violate an operation's contract."""


@dataclass
class HyperParams:
    """Tunables of the SONG algorithm.

    ``k=None`` resolves to ``output_dim + 1``, the smallest neighbourhood that
    supports a topology preserving layout in ``output_dim`` dimensions.
    ``partial_fit`` restarts the schedule at ``alpha_0 * incremental_rate``,
    further multiplied by the fraction of the epoch's rows that are new when
    ``incremental_share`` is set. A full-rate restart re-anneals the existing
    layout and moves old points far more than the increment requires.
    ``theta_g=None`` makes the growth threshold adaptive: it is set to
    ``theta_g_factor`` times the mean winner distance of the first epoch.
    Growth errors accumulate over one epoch (``growth_retention`` of them is
    carried into the next). With ``scale_theta_g`` the threshold is scaled
    by the number of rows per epoch relative to the epoch it was set in, so
    that growth responds to error per row rather than to dataset size. It is
    off by default: on the homogeneous increments tried, ongoing growth gave
    smaller late-increment displacement of old points.
    """

    k: Optional[int] = None
    t_max: int = 100
    alpha_0: float = 1.0
    incremental_rate: float = 0.5
    incremental_share: bool = True
    a: float = 1.577
    b: float = 0.895
    epsilon_decay: float = 0.9
    e_min: float = 0.01
    theta_g: Optional[float] = None
    theta_g_factor: float = 20.0
    growth_retention: float = 0.0
    scale_theta_g: bool = False
    neg_rate: int = 1
    dist_floor: float = 1e-3
    grad_clip: float = 4.0
    max_nodes: int = 4096
    centroid_includes_input: bool = False
    replay: str = "union"
    seed: int = 0

    def resolved(self, output_dim):
        """Copy with ``k`` filled in for the given output dimension."""
        if self.k is None:
            return replace(self, k=output_dim + 1)
        return replace(self)

    def validate(self, output_dim):
        k = output_dim + 1 if self.k is None else self.k
        if int(k) != k or k < output_dim + 1:
            raise ValidationError(f"k must be an integer >= output_dim + 1 = {output_dim + 1}, got {k}")
        if int(self.t_max) != self.t_max or self.t_max < 1:
            raise ValidationError(f"t_max must be a positive integer, got {self.t_max}")
        for name in ("alpha_0", "a", "b", "theta_g_factor", "dist_floor", "grad_clip"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be a positive finite number, got {value}")
        if not (np.isfinite(self.incremental_rate) and 0 < self.incremental_rate <= 1):
            raise ValidationError(f"incremental_rate must lie in (0, 1], got {self.incremental_rate}")
        if self.theta_g is not None and not (np.isfinite(self.theta_g) and self.theta_g > 0):
            raise ValidationError(f"theta_g must be positive, got {self.theta_g}")
        if not 0.0 <= self.growth_retention <= 1.0:
            raise ValidationError(f"growth_retention must lie in [0, 1], got {self.growth_retention}")
        for name in ("epsilon_decay", "e_min"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValidationError(f"{name} must lie in (0, 1), got {value}")
        if int(self.neg_rate) != self.neg_rate or self.neg_rate < 1:
            raise ValidationError(f"neg_rate must be a positive integer, got {self.neg_rate}")
        if int(self.max_nodes) != self.max_nodes or self.max_nodes < output_dim + 1:
            raise ValidationError(f"max_nodes must be an integer >= output_dim + 1, got {self.max_nodes}")
        if self.replay not in ("union", "new"):
            raise ValidationError(f"replay must be 'union' or 'new', got {self.replay!r}")

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown hyperparameters: {sorted(unknown)}")
        return cls(**d)


@dataclass
class DataMatrix:
    """Dense ``N x D`` input points with optional integer labels."""

    rows: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim == 1:
            rows = rows.reshape(1, -1)
        if rows.ndim != 2:
            raise ValidationError(f"data must be two dimensional, got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise ValidationError("data contains NaN or Inf entries")
        self.rows = np.ascontiguousarray(rows)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (rows.shape[0],):
                raise ValidationError(
                    f"labels must have length {rows.shape[0]}, got shape {labels.shape}")
            self.labels = labels.astype(np.int64)

    @property
    def n(self):
        return self.rows.shape[0]

    @property
    def dim(self):
        return self.rows.shape[1]


def as_data(points):
    if isinstance(points, DataMatrix):
        return points
    return DataMatrix(points)


@dataclass
class NeighborSet:
    """The ordered ``k`` nearest coding vectors of one query point."""

    indices: np.ndarray
    distances: np.ndarray

    def __len__(self):
        return len(self.indices)

    @property
    def winner(self):
        return int(self.indices[0])


class SongModel:
    """Coding vectors, directed edges, embedding and growth errors.

    Arrays are held in buffers with spare capacity so that growth does not
    reallocate on every insertion; the public properties expose views of the
    first ``n_nodes`` rows only.
    """

    def __init__(self, input_dim, output_dim, hyper, coding_vectors, embedding,
                 edges=None, growth_error=None, rng_state=None, epoch=0,
                 theta_g=None, reference_data=None, projection=None, theta_g_rows=None):
        n = coding_vectors.shape[0]
        self.input_dim = int(input_dim)
        self.output_dim = int(output_dim)
        self.hyper = hyper
        self.n_nodes = n
        self._C = np.ascontiguousarray(coding_vectors, dtype=np.float64).copy()
        self._Y = np.ascontiguousarray(embedding, dtype=np.float64).copy()
        self._E = (np.zeros((n, n)) if edges is None
                   else np.ascontiguousarray(edges, dtype=np.float64).copy())
        self._G = (np.zeros(n) if growth_error is None
                   else np.ascontiguousarray(growth_error, dtype=np.float64).copy())
        self.rng_state = (_rng.new_state(hyper.seed) if rng_state is None
                          else np.array(rng_state, dtype=np.uint64).reshape(1))
        self.epoch = int(epoch)
        self.theta_g = None if theta_g is None else float(theta_g)
        # rows per epoch when theta_g was fixed; the reference for its scaling
        self.theta_g_rows = None if theta_g_rows is None else int(theta_g_rows)
        # rows the model has been trained on; replayed by partial_fit
        self.reference_data = (np.zeros((0, self.input_dim)) if reference_data is None
                               else np.ascontiguousarray(reference_data, dtype=np.float64))
        # optional (mean, components) applied to raw inputs before the model
        self.projection = projection
        self.check_invariants()

    @property
    def coding_vectors(self):
        return self._C[:self.n_nodes]

    @property
    def embedding(self):
        return self._Y[:self.n_nodes]

    @property
    def edges(self):
        return self._E[:self.n_nodes, :self.n_nodes]

    @property
    def growth_error(self):
        return self._G[:self.n_nodes]

    @property
    def k(self):
        return self.hyper.k if self.hyper.k is not None else self.output_dim + 1

    def _buffers(self):
        return self._C, self._E, self._Y, self._G

    def _set_buffers(self, C, E, Y, G, n):
        self._C, self._E, self._Y, self._G = C, E, Y, G
        self.n_nodes = int(n)

    def copy(self):
        return SongModel(
            self.input_dim, self.output_dim, replace(self.hyper),
            self.coding_vectors, self.embedding, self.edges, self.growth_error,
            self.rng_state.copy(), self.epoch, self.theta_g,
            self.reference_data.copy(),
            None if self.projection is None else tuple(p.copy() for p in self.projection),
            self.theta_g_rows)

    def check_invariants(self):
        n = self.n_nodes
        if self.coding_vectors.shape != (n, self.input_dim):
            raise ValidationError("coding vectors do not match input_dim")
        if self.embedding.shape != (n, self.output_dim):
            raise ValidationError("embedding rows do not match coding vectors")
        if self.edges.shape != (n, n) or self.growth_error.shape != (n,):
            raise ValidationError("edge matrix or growth errors do not match coding vectors")
        E = self.edges
        if np.any(E < 0) or np.any(E > 1) or np.any(np.diag(E) != 0):
            raise ValidationError("edge strengths must lie in [0, 1] with a zero diagonal")
        if np.any(self.growth_error < 0):
            raise ValidationError("growth errors must be nonnegative")
        for arr in (self.coding_vectors, self.embedding, E, self.growth_error):
            if not np.all(np.isfinite(arr)):
                raise ValidationError("model state contains NaN or Inf")

    def state_equal(self, other):
        """Field-by-field exact comparison, used to check round-trips."""
        scalars = ("input_dim", "output_dim", "n_nodes", "epoch", "theta_g", "theta_g_rows")
        if any(getattr(self, s) != getattr(other, s) for s in scalars):
            return False
        if self.hyper != other.hyper:
            return False
        pairs = [(self.coding_vectors, other.coding_vectors), (self.embedding, other.embedding),
                 (self.edges, other.edges), (self.growth_error, other.growth_error),
                 (self.rng_state, other.rng_state), (self.reference_data, other.reference_data)]
        if (self.projection is None) != (other.projection is None):
            return False
        if self.projection is not None:
            pairs += list(zip(self.projection, other.projection))
        return all(a.shape == b.shape and np.array_equal(a, b) for a, b in pairs)

    def __repr__(self):
        return (f"SongModel(input_dim={self.input_dim}, output_dim={self.output_dim}, "
                f"n_nodes={self.n_nodes}, epoch={self.epoch})")


def init_model(input_dim, output_dim, hyper=None, data_bounds=None):
    """Create a model with ``output_dim + 1`` randomly placed coding vectors.

    Parameters
    ----------
    input_dim, output_dim : int
        Input dimension ``D`` and embedding dimension ``d < D``.
    hyper : HyperParams, optional
    data_bounds : (lower, upper) pair of length-``D`` arrays, optional
        Box for the initial coding vectors; the unit cube when omitted.
    """
    hyper = HyperParams() if hyper is None else hyper
    if int(input_dim) != input_dim or int(output_dim) != output_dim:
        raise ValidationError("dimensions must be integers")
    if output_dim < 1 or input_dim <= output_dim:
        raise ValidationError(f"need 1 <= output_dim < input_dim, got D={input_dim}, d={output_dim}")
    hyper.validate(output_dim)
    hyper = hyper.resolved(output_dim)
    if data_bounds is None:
        lo, hi = np.zeros(input_dim), np.ones(input_dim)
    else:
        lo = np.asarray(data_bounds[0], dtype=np.float64)
        hi = np.asarray(data_bounds[1], dtype=np.float64)
        if lo.shape != (input_dim,) or hi.shape != (input_dim,) or np.any(hi < lo):
            raise ValidationError("data_bounds must be two length-D arrays with lower <= upper")
    rng = np.random.default_rng(hyper.seed)
    n = output_dim + 1
    C = lo + (hi - lo) * rng.random((n, input_dim))
    Y = rng.uniform(-1.0, 1.0, size=(n, output_dim))
    state = rng.integers(0, 2**64 - 1, size=1, dtype=np.uint64, endpoint=True)
    return SongModel(input_dim, output_dim, hyper, C, Y, rng_state=state)


def _check_points(model, points):
    data = as_data(points)
    if data.dim != model.input_dim:
        raise ValidationError(f"points have dimension {data.dim}, model expects {model.input_dim}")
    return data


@njit(cache=True)
def _nearest_all(X, C):
    n = X.shape[0]
    m = C.shape[0]
    D = X.shape[1]
    idx = np.empty(n, np.int64)
    d2 = np.empty(n)
    for i in range(n):
        best = np.inf
        bi = 0
        for j in range(m):
            s = 0.0
            for t in range(D):
                diff = X[i, t] - C[j, t]
                s += diff * diff
            if s < best:
                best = s
                bi = j
        idx[i] = bi
        d2[i] = best
    return idx, d2


def winners(model, points):
    """Index of the nearest coding vector and squared distance, per point."""
    data = _check_points(model, points)
    return _nearest_all(data.rows, np.ascontiguousarray(model.coding_vectors))


def transform(model, points):
    """Map each point to the embedding row of its nearest coding vector."""
    idx, _ = winners(model, points)
    return model.embedding[idx].copy()


def quantization_error(model, points):
    """Mean of ``0.5 * ||x - c_winner||^2`` over the points."""
    data = _check_points(model, points)
    if data.n == 0:
        raise ValidationError("quantization error of an empty dataset is undefined")
    _, d2 = _nearest_all(data.rows, np.ascontiguousarray(model.coding_vectors))
    return float(0.5 * d2.mean())


__all__ = [
    "ValidationError", "HyperParams", "DataMatrix", "NeighborSet", "SongModel",
    "init_model", "transform", "quantization_error", "winners", "as_data",
]
