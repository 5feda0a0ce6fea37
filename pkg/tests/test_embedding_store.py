import io
import math

import numpy as np
import pytest

from dptg.embedding_store import (
    EmbeddingFormatError,
    EmbeddingStore,
    Geometry,
    load_embeddings,
    poincare_distance,
    project_into_ball,
    save_embeddings,
)

from conftest import make_store


def test_load_two_lines_euclidean(glove_like_text):
    store, report = load_embeddings(glove_like_text, Geometry.EUCLIDEAN)
    assert len(store) == 2
    assert store.dim == 3
    assert report.loaded == 2
    assert report.rescaled == 0
    np.testing.assert_allclose(store.lookup("cat"), [0.4, 0.5, 0.6])


def test_load_rescales_poincare_rows():
    text = io.StringIO("a 0.9 0.9\nb 0.1 0.2\n")
    store, report = load_embeddings(text, Geometry.POINCARE_BALL)
    assert report.rescaled == 1
    assert math.isclose(np.linalg.norm(store.lookup("a")), 1.0 - 1e-5, rel_tol=1e-12)
    assert np.linalg.norm(store.vectors, axis=1).max() < 1.0


def test_load_dimension_mismatch():
    text = io.StringIO("a 1 2 3\nb 1 2 3 4\n")
    with pytest.raises(EmbeddingFormatError, match="dimension"):
        load_embeddings(text)


def test_load_non_numeric():
    with pytest.raises(EmbeddingFormatError, match="non-numeric"):
        load_embeddings(io.StringIO("a 1 oops\n"))


def test_load_empty_input():
    with pytest.raises(EmbeddingFormatError, match="empty"):
        load_embeddings(io.StringIO(""))


def test_load_duplicate_word():
    with pytest.raises(EmbeddingFormatError, match="duplicate"):
        load_embeddings(io.StringIO("a 1\na 2\n"))


def test_load_lowercases_by_default():
    store, _ = load_embeddings(io.StringIO("The 1 2\n"))
    assert store.lookup("the") is not None
    assert store.lookup("The") is None


def test_lookup_oov_is_marker_not_error(glove_like_text):
    store, _ = load_embeddings(glove_like_text)
    assert store.lookup("dog") is None
    assert store.lookup("The") is None  # case-sensitive match


def test_euclidean_distance_examples():
    store = make_store(["o", "p"], [[0.0, 0.0], [3.0, 4.0]])
    assert store.distance(store.lookup("o"), store.lookup("o")) == 0.0
    assert math.isclose(store.distance(store.lookup("o"), store.lookup("p")), 5.0)


def test_poincare_distance_closed_form():
    # arcosh(5/3) = ln 3 for the pair (0,0), (0.5,0)
    d = poincare_distance(np.array([0.0, 0.0]), np.array([0.5, 0.0]))
    assert math.isclose(d, math.log(3.0), rel_tol=1e-12)


def test_poincare_distance_rejects_outside_ball():
    with pytest.raises(ValueError):
        poincare_distance(np.array([1.0, 0.0]), np.array([0.0, 0.0]))


def test_nearest_neighbor_exact_hit(line_store):
    store, positions = line_store
    word, dist = store.nearest_neighbor(np.array([positions[2]]))
    assert (word, dist) == ("c", 0.0)


def test_nearest_neighbor_orders_and_ties():
    store = make_store(["a", "b"], [[0.0], [1.0]])
    assert store.nearest_neighbor(np.array([0.4])) == ("a", pytest.approx(0.4))
    # exact midpoint: tie resolves to the lowest row index
    word, _ = store.nearest_neighbor(np.array([0.5]))
    assert word == "a"


def test_nearest_neighbor_empty_store():
    store = make_store(["a"], [[0.0]])
    store.words = []
    with pytest.raises(ValueError, match="empty"):
        store.nearest_index(np.array([[0.0]]))


def test_self_retrieval_both_geometries():
    gen = np.random.default_rng(7)
    vecs = gen.normal(size=(40, 6))
    store = make_store([f"w{i}" for i in range(40)], vecs)
    for i, w in enumerate(store.words):
        assert store.nearest_neighbor(store.vectors[i])[0] == w
    ball = vecs / (np.linalg.norm(vecs, axis=1, keepdims=True) + 4.0)
    pstore = make_store(store.words, ball, Geometry.POINCARE_BALL)
    for i, w in enumerate(pstore.words):
        assert pstore.nearest_neighbor(pstore.vectors[i])[0] == w


def test_sentence_distance_examples(line_store):
    store, _ = line_store
    assert store.sentence_distance(["a", "b", "c"], ["a", "b", "c"]) == 0.0
    with pytest.raises(ValueError, match="equal lengths"):
        store.sentence_distance(["a"] * 4, ["a"] * 9)
    # hand summation on the 1-D store {a: 0, b: 1, c: 3}
    toy = make_store(["a", "b", "c"], [[0.0], [1.0], [3.0]])
    assert math.isclose(toy.sentence_distance(["a", "b"], ["b", "c"]), 3.0)


def test_sentence_distance_oov_is_error(line_store):
    store, _ = line_store
    with pytest.raises(KeyError):
        store.sentence_distance(["a"], ["zzz"])


def test_sentence_distance_concatenation_additivity(line_store):
    store, _ = line_store
    x, xp = ["a", "c"], ["b", "d"]
    y, yp = ["e", "b"], ["c", "a"]
    total = store.sentence_distance(x + y, xp + yp)
    parts = store.sentence_distance(x, xp) + store.sentence_distance(y, yp)
    assert math.isclose(total, parts, rel_tol=1e-12)


@pytest.mark.parametrize("geometry", [Geometry.EUCLIDEAN, Geometry.POINCARE_BALL])
def test_distance_is_a_metric_on_sampled_triples(geometry):
    gen = np.random.default_rng(11)
    if geometry is Geometry.EUCLIDEAN:
        pts = gen.normal(size=(60, 4))
    else:
        raw = gen.normal(size=(60, 4))
        pts = raw / (np.linalg.norm(raw, axis=1, keepdims=True) + 1.2)
    store = make_store([f"w{i}" for i in range(60)], pts, geometry)
    idx = gen.integers(0, 60, size=(1000, 3))
    for i, j, k in idx:
        dij = store.distance(pts[i], pts[j])
        dji = store.distance(pts[j], pts[i])
        dik = store.distance(pts[i], pts[k])
        dkj = store.distance(pts[k], pts[j])
        assert dij >= 0.0
        assert abs(dij - dji) <= 1e-12
        assert dij <= dik + dkj + 1e-9
        if i == j:
            assert dij == 0.0


def test_store_rejects_bad_shapes():
    with pytest.raises(ValueError):
        EmbeddingStore(["a"], np.zeros((2, 3)), Geometry.EUCLIDEAN)
    with pytest.raises(ValueError):
        EmbeddingStore(["a", "b"], np.array([[1.0], [np.nan]]), Geometry.EUCLIDEAN)
    with pytest.raises(ValueError):
        EmbeddingStore(["a"], np.array([[1.0, 0.0]]), Geometry.POINCARE_BALL)


def test_project_into_ball():
    far = np.array([3.0, 4.0])
    proj = project_into_ball(far)
    assert math.isclose(np.linalg.norm(proj), 1.0 - 1e-5, rel_tol=1e-12)
    near = np.array([0.1, 0.1])
    np.testing.assert_array_equal(project_into_ball(near), near)


def test_save_load_round_trip(tmp_path, glove_like_text):
    store, _ = load_embeddings(glove_like_text)
    path = tmp_path / "emb.txt"
    save_embeddings(store, path)
    again, report = load_embeddings(path)
    assert again.words == store.words
    np.testing.assert_array_equal(again.vectors, store.vectors)
    assert report.loaded == 2
