"""Deterministic synthetic data for desk-scale experiments.

Ships a labeled review-style corpus (per-author vocabularies plus shared
sentiment-bearing words), a matching random embedding store with local
cluster structure so substitution rates grade smoothly across budgets, and
a random word-type lexicon. Nothing here depends on licensed downloads.
"""
from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from .attack_harness import Record
from .embedding_store import EmbeddingStore, Geometry, project_into_ball
from .eval_metrics import TypeLexicon, WORD_TYPES
from .noise_samplers import RngStream

_LETTERS = np.array(list(string.ascii_lowercase))

# Stream ids for the independent synthetic sources under one seed.
_VOCAB_STREAM = 1
_CORPUS_STREAM = 2
_EMBED_STREAM = 3
_LEXICON_STREAM = 4


@dataclass(frozen=True)
class SyntheticVocabulary:
    author_words: tuple[tuple[str, ...], ...]
    positive_words: tuple[str, ...]
    negative_words: tuple[str, ...]
    filler_words: tuple[str, ...]

    @property
    def all_words(self) -> list[str]:
        out: list[str] = []
        for group in self.author_words:
            out.extend(group)
        out.extend(self.positive_words)
        out.extend(self.negative_words)
        out.extend(self.filler_words)
        return out


def _draw_words(gen: np.random.Generator, count: int, taken: set[str]) -> list[str]:
    words = []
    while len(words) < count:
        length = int(gen.integers(4, 9))
        w = "".join(gen.choice(_LETTERS, size=length))
        if w not in taken:
            taken.add(w)
            words.append(w)
    return words


def synthetic_vocabulary(
    n_authors: int = 4,
    words_per_author: int = 40,
    sentiment_words: int = 15,
    filler_words: int = 120,
    seed: int = 0,
) -> SyntheticVocabulary:
    gen = RngStream(seed, _VOCAB_STREAM).generator
    taken: set[str] = set()
    authors = tuple(tuple(_draw_words(gen, words_per_author, taken)) for _ in range(n_authors))
    pos = tuple(_draw_words(gen, sentiment_words, taken))
    neg = tuple(_draw_words(gen, sentiment_words, taken))
    filler = tuple(_draw_words(gen, filler_words, taken))
    return SyntheticVocabulary(authors, pos, neg, filler)


def synthetic_corpus(
    n_authors: int = 4,
    records_per_author: int = 500,
    seed: int = 0,
    tokens_per_record: int = 28,
    vocabulary: SyntheticVocabulary | None = None,
) -> tuple[list[Record], SyntheticVocabulary]:
    """Labeled corpus where authors differ lexically but share sentiment words.

    Token mix per record: ~8% author-specific words, ~18% sentiment words
    matching the record label, the rest shared filler. The author share is
    deliberately small (a couple of telltale words per record) so graded
    perturbation budgets produce graded attack performance instead of a
    saturated classifier. Sentiment alternates pos/neg within each author.
    """
    if vocabulary is None:
        vocabulary = synthetic_vocabulary(n_authors=n_authors, seed=seed)
    if len(vocabulary.author_words) < n_authors:
        raise ValueError("vocabulary does not cover the requested author count")
    gen = RngStream(seed, _CORPUS_STREAM).generator
    records: list[Record] = []
    for a in range(n_authors):
        own = vocabulary.author_words[a]
        for k in range(records_per_author):
            sentiment = "pos" if k % 2 == 0 else "neg"
            pool_sent = vocabulary.positive_words if sentiment == "pos" else vocabulary.negative_words
            length = tokens_per_record + int(gen.integers(0, 9))
            tokens = []
            for _ in range(length):
                u = gen.random()
                if u < 0.08:
                    tokens.append(own[int(gen.integers(0, len(own)))])
                elif u < 0.26:
                    tokens.append(pool_sent[int(gen.integers(0, len(pool_sent)))])
                else:
                    tokens.append(
                        vocabulary.filler_words[int(gen.integers(0, len(vocabulary.filler_words)))]
                    )
            records.append(
                Record(
                    id=f"r{a:02d}{k:04d}",
                    author=f"author{a}",
                    sentiment=sentiment,
                    text=" ".join(tokens),
                )
            )
    return records, vocabulary


def synthetic_embeddings(
    words: list[str],
    dim: int = 16,
    geometry: Geometry = Geometry.EUCLIDEAN,
    seed: int = 0,
    cluster_size: int = 12,
    center_scale: float = 5.0,
    spread_range: tuple[float, float] = (0.03, 1.2),
) -> EmbeddingStore:
    """Random embeddings with log-spread local clusters.

    Words sit in clusters of `cluster_size` around well-separated Gaussian
    centers; each cluster's internal spread is drawn log-uniformly from
    `spread_range`. Nearest-neighbor distances then cover two decades, so
    noisy lookups drift to cluster mates first and to strangers only under
    heavy noise, and substitution rates respond smoothly to the noise
    radius instead of switching all at once.
    """
    gen = RngStream(seed, _EMBED_STREAM).generator
    geometry = Geometry(geometry)
    n = len(words)
    if n == 0:
        raise ValueError("no words to embed")
    lo, hi = spread_range
    if not 0 < lo <= hi:
        raise ValueError("spread_range must be positive and ordered")
    n_clusters = max(1, (n + cluster_size - 1) // cluster_size)
    centers = center_scale * gen.standard_normal((n_clusters, dim))
    spreads = np.exp(gen.uniform(np.log(lo), np.log(hi), size=n_clusters))
    assignment = np.repeat(np.arange(n_clusters), cluster_size)[:n]
    offsets = gen.standard_normal((n, dim)) * spreads[assignment][:, None]
    vectors = centers[assignment] + offsets
    if geometry is Geometry.POINCARE_BALL:
        # Shrink the cloud into the ball, keeping the cluster structure.
        radius = np.linalg.norm(vectors, axis=1)
        scale = 0.85 / max(radius.max(), 1e-12)
        vectors = vectors * scale
        vectors = np.vstack([project_into_ball(v) for v in vectors])
    return EmbeddingStore(words, vectors, geometry)


def synthetic_lexicon(words: list[str], seed: int = 0) -> TypeLexicon:
    """Assign each word 1-3 word types, weighted toward single-type words."""
    gen = RngStream(seed, _LEXICON_STREAM).generator
    types = sorted(WORD_TYPES)
    entries: dict[str, list[str]] = {}
    for w in words:
        u = gen.random()
        k = 1 if u < 0.65 else (2 if u < 0.95 else 3)
        picks = gen.choice(len(types), size=k, replace=False)
        entries[w] = [types[i] for i in sorted(picks)]
    return TypeLexicon(entries)
