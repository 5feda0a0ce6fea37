"""Word embedding storage with geometry-aware distance and lookup.

Two geometries are supported: flat Euclidean space (GloVe-style vectors)
and the open unit ball with the hyperbolic Poincare metric. A store is
immutable after loading, so all queries are pure functions and safe for
concurrent readers.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

# Points loaded into or projected onto the ball never reach the unit sphere;
# this cap leaves room for the hyperbolic metric to stay finite.
BALL_RADIUS_CAP = 1.0 - 1e-5


class Geometry(str, Enum):
    EUCLIDEAN = "euclidean"
    POINCARE_BALL = "poincare"


class EmbeddingFormatError(ValueError):
    """Malformed embedding input: ragged dimensions, bad floats, duplicates."""


@dataclass(frozen=True)
class LoadReport:
    """Counts emitted by the loader: rows kept, rows rescaled into the ball."""

    loaded: int
    rescaled: int
    rejected: int = 0

    def as_dict(self) -> dict:
        return {"loaded": self.loaded, "rescaled": self.rescaled, "rejected": self.rejected}


class EmbeddingStore:
    """Vocabulary plus a dense |V| x dim matrix under a declared geometry.

    Words map bijectively to row indices. For the Poincare ball every row
    has Euclidean norm strictly below 1.
    """

    def __init__(self, words: Sequence[str], vectors: np.ndarray, geometry: Geometry):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise ValueError("vectors must be a 2-D matrix")
        if len(words) != vectors.shape[0]:
            raise ValueError(f"{len(words)} words but {vectors.shape[0]} vector rows")
        if vectors.shape[1] < 1:
            raise ValueError("embedding dimension must be >= 1")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("vectors must be finite")
        index = {}
        for i, w in enumerate(words):
            if w in index:
                raise EmbeddingFormatError(f"duplicate word {w!r}")
            index[w] = i
        geometry = Geometry(geometry)
        if geometry is Geometry.POINCARE_BALL:
            norms = np.linalg.norm(vectors, axis=1)
            if np.any(norms >= 1.0):
                raise ValueError("Poincare ball rows must have norm < 1 (rescale on load)")
        self.words = list(words)
        self.vectors = vectors
        self.vectors.setflags(write=False)
        self.dim = vectors.shape[1]
        self.geometry = geometry
        self._index = index
        self._sq_norms = np.einsum("ij,ij->i", vectors, vectors)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def row_index(self, word: str) -> int | None:
        return self._index.get(word)

    def lookup(self, word: str) -> np.ndarray | None:
        """Exact-match embedding for a token, or None when out of vocabulary.

        Matching is case-sensitive; apply lowercasing at load time if the
        vocabulary is lowercase (the loader default).
        """
        i = self._index.get(word)
        return None if i is None else self.vectors[i]

    def distance(self, u: np.ndarray, v: np.ndarray) -> float:
        """Distance between two points under the store's geometry."""
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        if self.geometry is Geometry.EUCLIDEAN:
            return float(np.linalg.norm(u - v))
        return float(poincare_distance(u, v))

    def nearest_neighbor(self, query: np.ndarray) -> tuple[str, float]:
        """Word whose embedding is closest to the query point.

        Exact brute-force search; ties break to the lowest row index so
        outputs are reproducible under fixed seeds.
        """
        idx = self.nearest_index(np.asarray(query, dtype=np.float64)[None, :])[0]
        word = self.words[idx]
        return word, self.distance(self.vectors[idx], np.asarray(query, dtype=np.float64))

    def nearest_index(self, queries: np.ndarray) -> np.ndarray:
        """Row indices of the nearest word for each query row (batched)."""
        if len(self.words) == 0:
            raise ValueError("empty store")
        queries = np.asarray(queries, dtype=np.float64)
        if queries.ndim != 2 or queries.shape[1] != self.dim:
            raise ValueError(f"queries must have shape (n, {self.dim})")
        if not np.all(np.isfinite(queries)):
            raise ValueError("query must be finite")
        # Squared Euclidean distance to every row; argmin takes the first
        # (lowest-index) minimiser, which is the documented tie-break.
        sq = (
            self._sq_norms[None, :]
            - 2.0 * queries @ self.vectors.T
            + np.einsum("ij,ij->i", queries, queries)[:, None]
        )
        if self.geometry is Geometry.POINCARE_BALL:
            qn = np.einsum("ij,ij->i", queries, queries)
            if np.any(qn >= 1.0):
                raise ValueError("Poincare query must lie inside the unit ball")
            # arcosh(1 + 2 s) is increasing in s, so ranking by the argument
            # s = ||u-v||^2 / ((1-||u||^2)(1-||v||^2)) matches ranking by the
            # hyperbolic distance; (1-||q||^2) is constant per query row.
            sq = sq / (1.0 - self._sq_norms)[None, :]
        return np.argmin(sq, axis=1)

    def sentence_distance(self, left: Sequence[str], right: Sequence[str]) -> float:
        """Sum of per-position embedding distances between two token sequences.

        Defined only for sequences of equal length with all tokens in
        vocabulary; a length mismatch is an error, not a large distance.
        """
        if len(left) != len(right):
            raise ValueError(
                f"sentence distance needs equal lengths, got {len(left)} vs {len(right)}"
            )
        total = 0.0
        for a, b in zip(left, right):
            va, vb = self.lookup(a), self.lookup(b)
            if va is None:
                raise KeyError(f"token {a!r} not in vocabulary")
            if vb is None:
                raise KeyError(f"token {b!r} not in vocabulary")
            total += self.distance(va, vb)
        return total


def poincare_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Hyperbolic distance on the open unit ball.

    d(u, v) = arcosh(1 + 2 ||u-v||^2 / ((1-||u||^2)(1-||v||^2)))
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    un = float(u @ u)
    vn = float(v @ v)
    if un >= 1.0 or vn >= 1.0:
        raise ValueError("Poincare points must lie strictly inside the unit ball")
    diff = u - v
    arg = 1.0 + 2.0 * float(diff @ diff) / ((1.0 - un) * (1.0 - vn))
    return float(np.arccosh(arg))


def project_into_ball(point: np.ndarray, cap: float = BALL_RADIUS_CAP) -> np.ndarray:
    """Radially pull a point back inside the open unit ball if necessary."""
    point = np.asarray(point, dtype=np.float64)
    norm = float(np.linalg.norm(point))
    if norm < cap:
        return point
    return point * (cap / norm)


def load_embeddings(
    source: str | Path | IO[str] | Iterable[str],
    geometry: Geometry | str = Geometry.EUCLIDEAN,
    lowercase: bool = True,
) -> tuple[EmbeddingStore, LoadReport]:
    """Parse GloVe-style text (`word v1 v2 ... vd` per line) into a store.

    Blank lines are skipped. All lines must share one dimension and words
    must be unique (after optional lowercasing). Under ball geometry, rows
    with norm >= 1 are rescaled to just inside the sphere and counted in
    the returned report rather than rejected, tolerating float drift in
    third-party files.
    """
    geometry = Geometry(geometry)
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_embeddings(fh, geometry, lowercase=lowercase)

    words: list[str] = []
    rows: list[np.ndarray] = []
    dim: int | None = None
    seen: set[str] = set()
    rescaled = 0
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise EmbeddingFormatError(f"line {lineno}: expected `word floats...`")
        word = parts[0].lower() if lowercase else parts[0]
        try:
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError as exc:
            raise EmbeddingFormatError(f"line {lineno}: non-numeric field ({exc})") from exc
        if dim is None:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise EmbeddingFormatError(
                f"line {lineno}: dimension {vec.shape[0]} != {dim} of earlier lines"
            )
        if word in seen:
            raise EmbeddingFormatError(f"line {lineno}: duplicate word {word!r}")
        seen.add(word)
        if geometry is Geometry.POINCARE_BALL:
            norm = float(np.linalg.norm(vec))
            if norm >= 1.0:
                vec = vec * (BALL_RADIUS_CAP / norm)
                rescaled += 1
        words.append(word)
        rows.append(vec)
    if not words:
        raise EmbeddingFormatError("empty embedding input")
    store = EmbeddingStore(words, np.vstack(rows), geometry)
    return store, LoadReport(loaded=len(words), rescaled=rescaled)


def save_embeddings(store: EmbeddingStore, path: str | Path) -> None:
    """Write a store back out in the GloVe-style text format."""
    with open(path, "w", encoding="utf-8") as fh:
        for word, row in zip(store.words, store.vectors):
            fh.write(word + " " + " ".join(repr(float(x)) for x in row) + "\n")
