"""Scalar evaluation metrics for anonymization runs.

Covers multiclass MCC, the relative-gain privacy/utility trade-off score,
the disjoint-set word-type-change rate, and a mean-embedding cosine proxy
for semantic similarity.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .embedding_store import EmbeddingStore

WORD_TYPES = frozenset({"adjective", "adverb", "noun", "verb"})


def mcc(confusion) -> float:
    """Multiclass Matthews correlation from a k x k confusion matrix.

    Rows are true classes, columns predictions. +1 is perfect, 0 is
    random-equivalent; a degenerate matrix (all predictions or all truths
    in one class) has denominator 0 and returns 0 by convention, matching
    the random-guessing reading.
    """
    cm = np.asarray(confusion, dtype=np.float64)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.size == 0:
        raise ValueError("confusion must be a non-empty square matrix")
    if np.any(cm < 0):
        raise ValueError("confusion counts must be non-negative")
    s = cm.sum()
    if s == 0:
        raise ValueError("confusion must contain at least one count")
    c = np.trace(cm)
    t = cm.sum(axis=1)  # true-class totals
    p = cm.sum(axis=0)  # predicted-class totals
    num = c * s - float(t @ p)
    den_sq = (s * s - float(p @ p)) * (s * s - float(t @ t))
    if den_sq <= 0:
        return 0.0
    return float(num / np.sqrt(den_sq))


def relative_gain(
    attack_original: float,
    sentiment_original: float,
    attack_perturbed: float,
    sentiment_perturbed: float,
    normalization: str = "clamp",
) -> float:
    """Trade-off score: normalized utility retention minus attack retention.

    gamma = norm(S_p)/S_o - norm(A_p)/A_o. Perturbed scores are brought
    into [0, 1] first; `clamp` treats worse-than-random attack success as
    no success (max(m, 0)), `shift` uses the affine map (m+1)/2.
    """
    if not attack_original > 0 or not sentiment_original > 0:
        raise ValueError("baseline scores must be positive")
    if normalization == "clamp":
        norm = lambda m: max(m, 0.0)
    elif normalization == "shift":
        norm = lambda m: (m + 1.0) / 2.0
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    return norm(sentiment_perturbed) / sentiment_original - norm(attack_perturbed) / attack_original


class TypeLexicon:
    """Map from word to its set of word types (adjective/adverb/noun/verb)."""

    def __init__(self, entries: Mapping[str, Iterable[str]]):
        table: dict[str, frozenset[str]] = {}
        for word, types in entries.items():
            ts = frozenset(types)
            if not ts:
                raise ValueError(f"word {word!r} has an empty type set")
            unknown = ts - WORD_TYPES
            if unknown:
                raise ValueError(f"word {word!r} has unknown types {sorted(unknown)}")
            table[word] = ts
        self._table = table

    def __len__(self) -> int:
        return len(self._table)

    def __contains__(self, word: str) -> bool:
        return word in self._table

    def get(self, word: str) -> frozenset[str] | None:
        return self._table.get(word)

    def words(self) -> list[str]:
        return sorted(self._table)

    @classmethod
    def load_tsv(cls, path: str | Path) -> "TypeLexicon":
        """Read `word<TAB>comma-separated-types` lines."""
        entries: dict[str, list[str]] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line:
                    continue
                try:
                    word, types = line.split("\t")
                except ValueError:
                    raise ValueError(f"line {lineno}: expected `word<TAB>types`") from None
                entries[word] = [t.strip() for t in types.split(",") if t.strip()]
        return cls(entries)

    def save_tsv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for word in sorted(self._table):
                fh.write(f"{word}\t{','.join(sorted(self._table[word]))}\n")


@dataclass(frozen=True)
class TypeChangeReport:
    """Disjoint-set type-change tally over (original, replacement) pairs.

    `rate` is None when no pair had both words in the lexicon: the rate is
    undefined then, not zero.
    """

    changed: int
    considered: int
    skipped: int

    @property
    def rate(self) -> float | None:
        if self.considered == 0:
            return None
        return self.changed / self.considered

    def as_dict(self) -> dict:
        return {
            "changed": self.changed,
            "considered": self.considered,
            "skipped": self.skipped,
            "rate": self.rate,
        }


def word_type_change_rate(
    pairs: Iterable[tuple[str, str]], lexicon: TypeLexicon
) -> TypeChangeReport:
    """Count substitutions whose type sets share nothing with the original.

    A pair counts as a type change only when both words are in the lexicon
    and their type sets are disjoint; overlapping sets (e.g. a noun/verb
    word replaced by a verb) are not changes. Pairs with either word
    missing are excluded from the denominator and tallied as skipped.
    """
    changed = 0
    considered = 0
    skipped = 0
    for original, replacement in pairs:
        a = lexicon.get(original)
        b = lexicon.get(replacement)
        if a is None or b is None:
            skipped += 1
            continue
        considered += 1
        if not (a & b):
            changed += 1
    return TypeChangeReport(changed=changed, considered=considered, skipped=skipped)


def semantic_similarity(
    original: Sequence[str], perturbed: Sequence[str], store: EmbeddingStore
) -> float:
    """Cosine of the two mean in-vocabulary embeddings.

    A cheap, dependency-free stand-in for sentence-encoder similarity;
    treat it as a relative signal, not an absolute one.
    """

    def mean_vec(tokens: Sequence[str]) -> np.ndarray:
        vecs = [store.lookup(t) for t in tokens]
        vecs = [v for v in vecs if v is not None]
        if not vecs:
            raise ValueError("sequence has no in-vocabulary tokens")
        return np.mean(vecs, axis=0)

    u = mean_vec(original)
    v = mean_vec(perturbed)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("mean embedding has zero norm")
    return float(u @ v / (nu * nv))
