"""Deanonymization and utility attacks with character n-gram naive Bayes.

The attacker is deliberately lightweight: hashed character 4-gram features
and multinomial naive Bayes train in seconds on desk-scale corpora while
still exploiting the lexical traces word-level mechanisms leave behind.
Static attacks train on original text, adaptive attacks train on text the
mechanism itself produced.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .eval_metrics import mcc
from .noise_samplers import RngStream

N_BUCKETS = 1 << 18
_SPLIT_STREAM_ID = 101  # reserved stream so splits never collide with records

TASKS = ("author", "sentiment")
MODES = ("static", "adaptive")


@dataclass(frozen=True)
class Record:
    id: str
    author: str
    sentiment: str
    text: str


def binarize_sentiment(score: int, scale: int) -> str:
    """Map a raw review score to pos/neg: >=5 of 10, or >=3 of 5, is positive."""
    if scale == 10:
        return "pos" if score >= 5 else "neg"
    if scale == 5:
        return "pos" if score >= 3 else "neg"
    raise ValueError(f"unsupported sentiment scale {scale} (expected 5 or 10)")


class LabeledCorpus:
    """Records plus a deterministic, stratified train/test split.

    Stratification is by the (author, sentiment) pair so both tasks stay
    balanced across the splits; single-record strata go to the train side.
    """

    def __init__(self, records: Sequence[Record], train_ids: Sequence[str], test_ids: Sequence[str]):
        ids = [r.id for r in records]
        if len(set(ids)) != len(ids):
            raise ValueError("record ids must be unique")
        known = set(ids)
        overlap = set(train_ids) & set(test_ids)
        if overlap:
            raise ValueError(f"train/test overlap: {sorted(overlap)[:3]}")
        for i in list(train_ids) + list(test_ids):
            if i not in known:
                raise ValueError(f"split id {i!r} not in corpus")
        self.records = list(records)
        self.train_ids = list(train_ids)
        self.test_ids = list(test_ids)
        self._by_id = {r.id: r for r in self.records}

    @classmethod
    def build(cls, records: Sequence[Record], seed: int, test_fraction: float = 0.2) -> "LabeledCorpus":
        if not 0.0 < test_fraction < 1.0:
            raise ValueError("test_fraction must be in (0, 1)")
        strata: dict[tuple[str, str], list[str]] = {}
        for r in records:
            strata.setdefault((r.author, r.sentiment), []).append(r.id)
        gen = RngStream(seed, stream_id=_SPLIT_STREAM_ID).generator
        train_ids: list[str] = []
        test_ids: list[str] = []
        for key in sorted(strata):
            ids = sorted(strata[key])
            perm = gen.permutation(len(ids))
            ids = [ids[i] for i in perm]
            if len(ids) < 2:
                train_ids.extend(ids)
                continue
            n_test = min(len(ids) - 1, max(1, round(test_fraction * len(ids))))
            test_ids.extend(ids[:n_test])
            train_ids.extend(ids[n_test:])
        return cls(records, sorted(train_ids), sorted(test_ids))

    def record(self, rec_id: str) -> Record:
        return self._by_id[rec_id]

    @property
    def train_records(self) -> list[Record]:
        return [self._by_id[i] for i in self.train_ids]

    @property
    def test_records(self) -> list[Record]:
        return [self._by_id[i] for i in self.test_ids]

    def labels(self, task: str) -> list[str]:
        """Sorted label set of the whole corpus for one task."""
        if task not in TASKS:
            raise ValueError(f"unknown task {task!r}")
        attr = "author" if task == "author" else "sentiment"
        return sorted({getattr(r, attr) for r in self.records})


@lru_cache(maxsize=1 << 20)
def bucket(gram: str) -> int:
    """Stable hash of an n-gram into the fixed feature space."""
    digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % N_BUCKETS


def featurize(text: str, n: int = 4) -> dict[int, int]:
    """Counts of overlapping character n-grams of the lowercased text.

    Texts shorter than n yield an empty vector. Collisions from hashing
    are accepted; the map is deterministic across runs and platforms.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    text = text.lower()
    counts: dict[int, int] = {}
    for i in range(len(text) - n + 1):
        b = bucket(text[i : i + n])
        counts[b] = counts.get(b, 0) + 1
    return counts


class NaiveBayesModel:
    """Multinomial naive Bayes over hashed character n-gram counts."""

    def __init__(
        self,
        classes: list[str],
        class_log_prior: np.ndarray,
        feature_log_prob: np.ndarray,
        n: int,
        alpha: float,
    ):
        self.classes = classes
        self.class_log_prior = class_log_prior
        self.feature_log_prob = feature_log_prob
        self.n = n
        self.alpha = alpha

    def predict(self, text: str) -> str:
        feats = featurize(text, self.n)
        scores = self.class_log_prior.copy()
        if feats:
            keys = np.fromiter(feats.keys(), dtype=np.int64, count=len(feats))
            vals = np.fromiter(feats.values(), dtype=np.float64, count=len(feats))
            scores = scores + self.feature_log_prob[:, keys] @ vals
        return self.classes[int(np.argmax(scores))]

    def predict_many(self, texts: Sequence[str]) -> list[str]:
        return [self.predict(t) for t in texts]


def train(records: Sequence[Record], task: str, n: int = 4, alpha: float = 0.1) -> NaiveBayesModel:
    """Fit the classifier for one task on the given records."""
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    attr = "author" if task == "author" else "sentiment"
    labels = [getattr(r, attr) for r in records]
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise ValueError(f"need >= 2 classes to train, got {classes}")
    class_index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), N_BUCKETS), dtype=np.float64)
    doc_counts = np.zeros(len(classes), dtype=np.float64)
    for r, label in zip(records, labels):
        c = class_index[label]
        doc_counts[c] += 1
        feats = featurize(r.text, n)
        if feats:
            keys = np.fromiter(feats.keys(), dtype=np.int64, count=len(feats))
            vals = np.fromiter(feats.values(), dtype=np.float64, count=len(feats))
            np.add.at(counts[c], keys, vals)
    class_log_prior = np.log(doc_counts / doc_counts.sum())
    totals = counts.sum(axis=1, keepdims=True)
    feature_log_prob = np.log(counts + alpha) - np.log(totals + alpha * N_BUCKETS)
    return NaiveBayesModel(classes, class_log_prior, feature_log_prob, n, alpha)


def confusion_matrix(
    true_labels: Sequence[str], predicted: Sequence[str], classes: Sequence[str]
) -> np.ndarray:
    """k x k counts, rows true and columns predicted, over a fixed class list."""
    index = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(true_labels, predicted):
        cm[index[t], index[p]] += 1
    return cm


@dataclass(frozen=True)
class AttackResult:
    mode: str
    task: str
    mcc: float
    confusion: tuple[tuple[int, ...], ...]
    classes: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "task": self.task,
            "mcc": self.mcc,
            "confusion": [list(row) for row in self.confusion],
            "classes": list(self.classes),
        }


def run_attack(
    corpus: LabeledCorpus,
    perturbed: Sequence[Record],
    task: str,
    mode: str,
    n: int = 4,
    alpha: float = 0.1,
) -> AttackResult:
    """Train per the attack mode and score MCC on the perturbed test split.

    Static trains on the original train split (the attacker never saw the
    mechanism); adaptive trains on the perturbed train split (the attacker
    knows the mechanism and re-created its output). Both are evaluated on
    the perturbed test texts with the original labels.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    perturbed_by_id = {r.id: r for r in perturbed}
    if len(perturbed_by_id) != len(perturbed):
        raise ValueError("perturbed records have duplicate ids")
    original_ids = {r.id for r in corpus.records}
    if set(perturbed_by_id) != original_ids:
        raise ValueError("perturbed corpus ids do not align with the original corpus")

    if mode == "static":
        train_records = corpus.train_records
    else:
        train_records = [perturbed_by_id[i] for i in corpus.train_ids]
    model = train(train_records, task, n=n, alpha=alpha)

    classes = corpus.labels(task)
    attr = "author" if task == "author" else "sentiment"
    test_original = corpus.test_records
    truths = [getattr(r, attr) for r in test_original]
    predictions = model.predict_many([perturbed_by_id[r.id].text for r in test_original])
    # Model classes come from the train split; predictions are always a
    # subset of the corpus-level class list used for the confusion matrix.
    cm = confusion_matrix(truths, predictions, classes)
    return AttackResult(
        mode=mode,
        task=task,
        mcc=mcc(cm),
        confusion=tuple(tuple(int(x) for x in row) for row in cm),
        classes=tuple(classes),
    )
