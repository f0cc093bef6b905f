"""Clustering quality, displacement and synthetic-data utilities."""
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning
from sklearn.metrics import adjusted_mutual_info_score

from .model import DataMatrix, ValidationError, as_data

# Side of the cube that blob centers are drawn from. Chosen so that, in 60
# dimensions, std 4 gives cleanly separated clusters while std 20 mixes them.
DEFAULT_CENTER_BOX = 22.0


@dataclass(frozen=True)
class BlobSpec:
    n_clusters: int = 10
    cluster_std: float = 4.0
    dims: int = 60
    points_per_cluster: int = 200
    seed: int = 0
    center_box: float = DEFAULT_CENTER_BOX

    def __post_init__(self):
        for name in ("n_clusters", "dims", "points_per_cluster"):
            if int(getattr(self, name)) < 1:
                raise ValidationError(f"{name} must be positive")
        if self.cluster_std < 0 or self.center_box <= 0:
            raise ValidationError("cluster_std must be nonnegative and center_box positive")


def blob_centers(spec):
    rng = np.random.default_rng(spec.seed)
    return rng.uniform(0.0, spec.center_box, size=(spec.n_clusters, spec.dims))


def make_blobs(spec):
    """Isotropic Gaussian clusters with centers uniform in ``[0, center_box]^dims``.

    Rows are grouped by cluster; the result is fully determined by ``spec``.
    """
    rng = np.random.default_rng(spec.seed)
    centers = rng.uniform(0.0, spec.center_box, size=(spec.n_clusters, spec.dims))
    labels = np.repeat(np.arange(spec.n_clusters), spec.points_per_cluster)
    noise = rng.standard_normal((labels.size, spec.dims))
    return DataMatrix(centers[labels] + spec.cluster_std * noise, labels)


def kmeans(points, k, seed=0, n_init=5, max_iter=300):
    """Lloyd's k-means from k-means++ seeds; best inertia over ``n_init`` restarts."""
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("points must be a 2-d array")
    if not 1 <= k <= X.shape[0]:
        raise ValidationError(f"k must lie in [1, {X.shape[0]}], got {k}")
    with warnings.catch_warnings():
        # duplicate embedding rows are normal: many inputs share a coding vector
        warnings.simplefilter("ignore", ConvergenceWarning)
        km = KMeans(n_clusters=k, init="k-means++", n_init=n_init, max_iter=max_iter,
                    random_state=seed)
        return km.fit_predict(X)


def adjusted_mutual_information(labels_a, labels_b):
    """AMI with arithmetic-mean normalisation and hypergeometric expected MI."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError("label vectors must be one dimensional and of equal length")
    if a.size < 2:
        raise ValidationError("need at least two labels")
    return float(adjusted_mutual_info_score(a, b, average_method="arithmetic"))


def consecutive_displacement(y_prev, y_curr):
    """Per-point Euclidean displacement between two aligned embeddings.

    Returns ``(mean, std, per_point)``.
    """
    y_prev = np.asarray(y_prev, dtype=np.float64)
    y_curr = np.asarray(y_curr, dtype=np.float64)
    if y_prev.shape != y_curr.shape:
        raise ValidationError(f"shape mismatch: {y_prev.shape} vs {y_curr.shape}")
    per_point = np.sqrt(((y_curr - y_prev) ** 2).sum(axis=1))
    if per_point.size == 0:
        return 0.0, 0.0, per_point
    return float(per_point.mean()), float(per_point.std()), per_point


def fit_pca(rows, n_components):
    """Mean and principal axes (rows of ``components``) of the data.

    Axes are ordered by decreasing variance and each is signed so that its
    largest-magnitude loading is positive, which makes the result
    deterministic.
    """
    X = np.asarray(rows, dtype=np.float64)
    n, D = X.shape
    if not 1 <= n_components <= min(n, D):
        raise ValidationError(f"n_components must lie in [1, {min(n, D)}], got {n_components}")
    mean = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    tol = s[0] * max(n, D) * np.finfo(np.float64).eps if s.size else 0.0
    rank = int(np.sum(s > tol))
    if rank < n_components:
        warnings.warn(f"data has rank {rank}; returning {rank} of {n_components} components")
        n_components = max(rank, 1)
    comps = vt[:n_components]
    flip = np.sign(comps[np.arange(n_components), np.argmax(np.abs(comps), axis=1)])
    flip[flip == 0] = 1.0
    return mean, comps * flip[:, None]


def apply_projection(rows, projection):
    mean, comps = projection
    return (np.asarray(rows, dtype=np.float64) - mean) @ comps.T


def pca_reduce(data, n_components):
    """Project ``data`` onto its leading principal components."""
    data = as_data(data)
    projection = fit_pca(data.rows, n_components)
    return DataMatrix(apply_projection(data.rows, projection), data.labels)
