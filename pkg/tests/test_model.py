import numpy as np
import pytest

from song import (DataMatrix, HyperParams, ValidationError, init_model, quantization_error,
                  transform)
from song.model import winners

from conftest import make_model


def test_init_shapes_d2():
    m = init_model(10, 2)
    assert m.coding_vectors.shape == (3, 10)
    assert m.embedding.shape == (3, 2)
    assert np.array_equal(m.edges, np.zeros((3, 3)))
    assert np.array_equal(m.growth_error, np.zeros(3))


def test_init_d3_has_four_vectors():
    assert init_model(5, 3).n_nodes == 4


def test_init_ranges_and_bounds():
    lo, hi = np.full(4, -2.0), np.array([0.0, 1.0, 5.0, -1.0])
    m = init_model(4, 2, HyperParams(seed=3), (lo, hi))
    assert np.all(m.coding_vectors >= lo) and np.all(m.coding_vectors <= hi)
    assert np.all(np.abs(m.embedding) <= 1.0)
    u = init_model(4, 2)
    assert np.all((u.coding_vectors >= 0) & (u.coding_vectors <= 1))


def test_init_deterministic_and_seed_sensitive():
    a = init_model(6, 2, HyperParams(seed=7))
    b = init_model(6, 2, HyperParams(seed=7))
    c = init_model(6, 2, HyperParams(seed=8))
    assert a.state_equal(b)
    assert not np.array_equal(a.coding_vectors, c.coding_vectors)


@pytest.mark.parametrize("D,d", [(2, 2), (3, 0), (2.5, 1)])
def test_init_rejects_bad_dims(D, d):
    with pytest.raises(ValidationError):
        init_model(D, d)


@pytest.mark.parametrize("kw", [
    {"k": 2}, {"t_max": 0}, {"alpha_0": 0.0}, {"a": -1.0}, {"epsilon_decay": 1.0},
    {"e_min": 0.0}, {"neg_rate": 0}, {"theta_g": -1.0}, {"replay": "old"},
    {"growth_retention": 1.5}, {"incremental_rate": 0.0}, {"max_nodes": 2},
])
def test_invalid_hyperparameters(kw):
    with pytest.raises(ValidationError):
        init_model(10, 2, HyperParams(**kw))


def test_hyper_dict_roundtrip_and_unknown_key():
    h = HyperParams(k=4, theta_g=2.5)
    assert HyperParams.from_dict(h.to_dict()) == h
    with pytest.raises(ValidationError):
        HyperParams.from_dict({"kk": 1})


def test_datamatrix_validation():
    with pytest.raises(ValidationError):
        DataMatrix(np.array([[1.0, np.nan]]))
    with pytest.raises(ValidationError):
        DataMatrix(np.ones((3, 2)), labels=[0, 1])
    assert DataMatrix(np.ones(4)).rows.shape == (1, 4)


def test_transform_point_on_coding_vector():
    m = make_model([[0, 0, 0], [1, 1, 1], [5, 0, 0]], [[0, 0], [1, 0], [0, 1]])
    out = transform(m, [[1, 1, 1]])
    assert np.array_equal(out, [[1.0, 0.0]])


def test_transform_shape_and_purity(rng):
    m = init_model(5, 2, HyperParams(seed=1))
    X = rng.random((17, 5))
    before = m.copy()
    first = transform(m, X)
    assert first.shape == (17, 2)
    assert np.array_equal(first, transform(m, X))
    assert m.state_equal(before)


def test_transform_picks_nearer_of_two():
    m = make_model([[1.0, 0.0], [0.0, 2.0], [9.0, 9.0]], [[3, 3], [4, 4], [5, 5]])
    assert np.array_equal(transform(m, [[0.0, 0.0]]), [[3.0, 3.0]])


def test_transform_matches_bruteforce(rng):
    m = init_model(7, 2, HyperParams(seed=2))
    X = rng.random((50, 7))
    d2 = ((X[:, None, :] - m.coding_vectors[None]) ** 2).sum(-1)
    assert np.array_equal(transform(m, X), m.embedding[d2.argmin(1)])


def test_transform_dimension_mismatch():
    with pytest.raises(ValidationError):
        transform(init_model(5, 2), np.ones((2, 4)))


def test_qe_zero_on_coding_vectors():
    m = init_model(5, 2, HyperParams(seed=4))
    assert quantization_error(m, m.coding_vectors) == 0.0


def test_qe_single_point_distance_two():
    m = make_model([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]], np.zeros((3, 2)))
    assert quantization_error(m, [[2.0, 0.0]]) == pytest.approx(2.0)


def test_qe_matches_bruteforce(rng):
    m = init_model(6, 2, HyperParams(seed=5))
    X = rng.random((20, 6))
    ref = np.mean([0.5 * min(np.sum((x - c) ** 2) for c in m.coding_vectors) for x in X])
    assert quantization_error(m, X) == pytest.approx(ref, rel=1e-12)


def test_qe_empty_raises():
    with pytest.raises(ValidationError):
        quantization_error(init_model(3, 2), np.zeros((0, 3)))


def test_winners_squared_distances(rng):
    m = init_model(4, 2, HyperParams(seed=6))
    X = rng.random((9, 4))
    idx, d2 = winners(m, X)
    assert np.allclose(d2, ((X - m.coding_vectors[idx]) ** 2).sum(1))


def test_invariants_rejected_on_construction():
    with pytest.raises(ValidationError):
        make_model(np.zeros((3, 2)), np.zeros((3, 2)), E=np.eye(3))
    with pytest.raises(ValidationError):
        make_model(np.zeros((3, 2)), np.zeros((2, 2)))
    with pytest.raises(ValidationError):
        make_model(np.zeros((3, 2)), np.zeros((3, 2)), G=-np.ones(3))
