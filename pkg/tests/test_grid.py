import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skelrecall.grid import (
    Connectivity,
    LabelGrid,
    ProbGrid,
    argmax_labels,
    binarize,
    class_list,
    neighbors,
    one_hot,
)


def test_binarize_examples():
    assert not binarize(LabelGrid(np.zeros((4, 4), int), 1)).any()
    y = LabelGrid(np.array([[0, 1], [2, 0]]), 2)
    assert binarize(y).tolist() == [[False, True], [True, False]]
    v = np.zeros((2, 2, 2), int)
    v[1, 0, 1] = 3
    assert binarize(LabelGrid(v, 3)).sum() == 1


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_binarize_counts_nonzero(seed, k):
    data = np.random.default_rng(seed).integers(0, k + 1, size=(6, 7))
    assert binarize(LabelGrid(data, k)).sum() == np.count_nonzero(data)


def test_neighbor_examples():
    assert len(neighbors(0, Connectivity.C4, (3, 3))) == 2
    assert len(neighbors(13, Connectivity.C26, (3, 3, 3))) == 26
    assert len(neighbors(4, Connectivity.C8, (3, 3))) == 8
    with pytest.raises(IndexError):
        neighbors(9, Connectivity.C8, (3, 3))


@settings(max_examples=60, deadline=None)
@given(
    st.sampled_from([Connectivity.C4, Connectivity.C8, Connectivity.C6, Connectivity.C18, Connectivity.C26]),
    st.integers(0, 10_000),
)
def test_neighbor_relation_is_symmetric(conn, seed):
    dims = (4, 5) if conn.ndim == 2 else (3, 4, 2)
    i = seed % int(np.prod(dims))
    for j in neighbors(i, conn, dims):
        assert i in neighbors(j, conn, dims)
        assert i != j


def test_connectivity_parse_and_dual():
    assert Connectivity.parse("8", 2) is Connectivity.C8
    assert Connectivity.parse("3d-26") is Connectivity.C26
    assert Connectivity.C8.dual() is Connectivity.C4
    assert Connectivity.C26.dual() is Connectivity.C6
    with pytest.raises(ValueError):
        Connectivity.parse("8", 3)
    assert len(Connectivity.C18.offsets()) == 18


def test_grid_validation():
    with pytest.raises(ValueError):
        LabelGrid(np.array([[0, 3]]), 2)
    with pytest.raises(ValueError):
        LabelGrid(np.zeros((2, 2, 2, 2), int), 1)
    with pytest.raises(ValueError):
        ProbGrid(np.full((2, 3, 3), 1.5))
    with pytest.raises(ValueError):
        ProbGrid(np.full((2, 3, 3), 0.2), normalized=True)


def test_label_grid_is_read_only_copy():
    src = np.array([[0, 1]])
    y = LabelGrid(src, 1)
    src[0, 0] = 1
    assert y.data[0, 0] == 0
    with pytest.raises(ValueError):
        y.data[0, 0] = 1


def test_one_hot_argmax_roundtrip():
    data = np.random.default_rng(1).integers(0, 4, size=(5, 6))
    y = LabelGrid(data, 3)
    p = one_hot(y)
    assert p.data.shape == (4, 5, 6)
    assert np.allclose(p.data.sum(axis=0), 1.0)
    assert argmax_labels(p) == y


def test_argmax_ties_take_lower_class():
    p = ProbGrid(np.full((3, 2, 2), 1 / 3))
    assert (argmax_labels(p).data == 0).all()


def test_class_list():
    assert class_list(3) == [1, 2, 3]
    assert class_list(2, include_background=True) == [0, 1, 2]
