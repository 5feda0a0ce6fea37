import io

import numpy as np
import pytest

from dptg.embedding_store import EmbeddingStore, Geometry


def make_store(words, vectors, geometry=Geometry.EUCLIDEAN):
    return EmbeddingStore(words, np.asarray(vectors, dtype=float), geometry)


@pytest.fixture
def line_store():
    """Five words on the real line; Voronoi cells are easy to reason about."""
    positions = [0.0, 0.7, 1.5, 2.4, 4.0]
    return make_store(list("abcde"), [[p] for p in positions]), positions


@pytest.fixture
def glove_like_text():
    return io.StringIO("the 0.1 0.2 0.3\ncat 0.4 0.5 0.6\n")
