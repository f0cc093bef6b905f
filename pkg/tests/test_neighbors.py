import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from song import ValidationError, init_model
from song.neighbors import nearest_coding_vectors

from conftest import make_model


def _oracle(C, x, k):
    d = np.sqrt(((C - x) ** 2).sum(1))
    order = np.lexsort((np.arange(len(C)), d))[:k]
    return order, d[order]


def test_query_on_coding_vector(rng):
    C = rng.random((8, 4))
    m = make_model(C, rng.random((8, 2)))
    ns = nearest_coding_vectors(m, C[5], k=3)
    assert ns.winner == 5 and ns.distances[0] == 0.0


def test_hand_geometry():
    m = make_model([[0, 0], [3, 0], [0, 4]], np.zeros((3, 1)))
    ns = nearest_coding_vectors(m, np.array([1.0, 0.0]), k=2)
    assert list(ns.indices) == [0, 1]
    assert np.allclose(ns.distances, [1.0, 2.0])


def test_matches_full_sort_oracle(rng):
    C = rng.normal(size=(50, 6))
    m = make_model(C, rng.random((50, 2)))
    for _ in range(100):
        x = rng.normal(size=6)
        ns = nearest_coding_vectors(m, x, k=5)
        idx, dist = _oracle(C, x, 5)
        assert np.array_equal(ns.indices, idx)
        assert np.allclose(ns.distances, dist, rtol=1e-12, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 200), st.integers(1, 8), st.integers(1, 12), st.integers(0, 2**31))
def test_oracle_random_sizes(n, D, k, seed):
    r = np.random.default_rng(seed)
    C = r.normal(size=(n, D))
    m = make_model(C, np.zeros((n, 1)))
    x = r.normal(size=D)
    ns = nearest_coding_vectors(m, x, k=k)
    idx, dist = _oracle(C, x, k)
    assert len(ns) == min(k, n)
    assert np.all(np.diff(ns.distances) >= 0)
    # fastmath may reorder sums, so compare distances rather than indices on near-ties
    assert np.allclose(ns.distances, dist, rtol=1e-12, atol=1e-12)
    assert ns.distances[0] == pytest.approx(dist[0], abs=1e-12)


def test_ties_break_to_lower_index():
    C = np.array([[1.0, 0], [0, 1.0], [-1.0, 0], [0, -1.0]])
    m = make_model(C, np.zeros((4, 1)))
    ns = nearest_coding_vectors(m, np.zeros(2), k=3)
    assert list(ns.indices) == [0, 1, 2]


def test_k_larger_than_model():
    m = init_model(3, 2)
    assert len(nearest_coding_vectors(m, np.zeros(3), k=10)) == 3


def test_default_k_is_model_k():
    m = init_model(4, 2)
    assert len(nearest_coding_vectors(m, np.zeros(4))) == m.k


def test_errors():
    m = init_model(3, 2)
    with pytest.raises(ValidationError):
        nearest_coding_vectors(m, np.zeros(2))
    with pytest.raises(ValidationError):
        nearest_coding_vectors(m, np.zeros(3), k=0)
