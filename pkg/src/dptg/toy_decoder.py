"""Autoregressive n-gram decoder generating text through the DP sampler.

A desk-scale stand-in for a neural paraphraser: next-token scores come
from an add-alpha smoothed n-gram model mixed with a bias toward the
input sentence's own content words, are rescaled into [0, 1], and are
sampled via temperature softmax, so each step spends 2*dq/T budget and a
length-n generation spends n times that.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dp_softmax import (
    LogitVector,
    epsilon_from_temperature,
    rescale_unit_interval,
    sample_index,
    softmax_with_temperature,
)
from .noise_samplers import RngStream
from .word_mechanism import detokenize, tokenize

END_TOKEN = "<eos>"
DEFAULT_MODEL_WEIGHT = 0.7  # model share of the model/bias score mixture


class NgramModel:
    """Order-k model with add-alpha smoothing and uniform unseen-context backoff.

    The end-of-sequence marker is an ordinary vocabulary token, so the model
    learns sentence lengths. Conditional distributions always sum to 1.
    """

    def __init__(
        self,
        order: int,
        alpha: float,
        vocabulary: Sequence[str],
        counts: dict[tuple[str, ...], Counter],
    ):
        if order < 1:
            raise ValueError("order must be >= 1")
        if not alpha > 0:
            raise ValueError("alpha must be > 0")
        if END_TOKEN not in vocabulary:
            raise ValueError(f"vocabulary must contain the end marker {END_TOKEN!r}")
        if len(set(vocabulary)) != len(vocabulary):
            raise ValueError("vocabulary entries must be unique")
        self.order = order
        self.alpha = float(alpha)
        self.vocabulary = list(vocabulary)
        self.counts = counts
        self._vocab_index = {w: i for i, w in enumerate(self.vocabulary)}

    def context_key(self, context: Sequence[str]) -> tuple[str, ...]:
        """Trim/pad a history window to the (order-1)-gram the model keys on."""
        k = self.order - 1
        ctx = list(context)[-k:] if k else []
        while len(ctx) < k:
            ctx.insert(0, END_TOKEN)
        return tuple(ctx)

    def conditional(self, context: Sequence[str]) -> np.ndarray:
        """Smoothed next-token distribution; unseen contexts back off to uniform."""
        v = len(self.vocabulary)
        key = self.context_key(context)
        cnt = self.counts.get(key)
        if cnt is None:
            return np.full(v, 1.0 / v)
        total = sum(cnt.values())
        probs = np.full(v, self.alpha, dtype=np.float64)
        for tok, c in cnt.items():
            probs[self._vocab_index[tok]] += c
        return probs / (total + self.alpha * v)

    def to_json_dict(self) -> dict:
        return {
            "order": self.order,
            "alpha": self.alpha,
            "vocabulary": self.vocabulary,
            "counts": [
                {"context": list(ctx), "counts": dict(sorted(cnt.items()))}
                for ctx, cnt in sorted(self.counts.items())
            ],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "NgramModel":
        counts = {
            tuple(entry["context"]): Counter(entry["counts"]) for entry in obj["counts"]
        }
        return cls(obj["order"], obj["alpha"], obj["vocabulary"], counts)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "NgramModel":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def train_ngram(corpus: Iterable[Sequence[str]], order: int, alpha: float) -> NgramModel:
    """Count (order-1)-gram transitions over end-marker-padded sequences."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    vocab: set[str] = set()
    counts: dict[tuple[str, ...], Counter] = {}
    n_sequences = 0
    k = order - 1
    for seq in corpus:
        seq = list(seq)
        if not seq:
            continue
        if END_TOKEN in seq:
            raise ValueError(f"corpus sequences must not contain {END_TOKEN!r}")
        n_sequences += 1
        vocab.update(seq)
        padded = [END_TOKEN] * k + seq + [END_TOKEN]
        for i in range(k, len(padded)):
            ctx = tuple(padded[i - k : i])
            counts.setdefault(ctx, Counter())[padded[i]] += 1
    if n_sequences == 0:
        raise ValueError("empty corpus")
    vocabulary = sorted(vocab) + [END_TOKEN]
    return NgramModel(order, alpha, vocabulary, counts)


def logits(
    model: NgramModel,
    context: Sequence[str],
    content_bias: Sequence[str],
    model_weight: float = DEFAULT_MODEL_WEIGHT,
) -> LogitVector:
    """Bounded next-token scores: model/bias mixture rescaled onto [0, 1].

    The bias term upweights tokens of the sentence being paraphrased, the
    simplest stand-in for conditioning the decoder on the input's content.
    The mixture weight is a tuning knob, not a calibrated quantity.
    """
    if not 0.0 <= model_weight <= 1.0:
        raise ValueError("model_weight must lie in [0, 1]")
    p = model.conditional(context)
    bias = np.zeros(len(model.vocabulary))
    n_bias = 0
    for tok in content_bias:
        idx = model._vocab_index.get(tok)
        if idx is not None:
            bias[idx] += 1.0
            n_bias += 1
    if n_bias:
        bias /= n_bias
    mix = model_weight * p + (1.0 - model_weight) * bias
    return rescale_unit_interval(mix)


@dataclass(frozen=True)
class GenerationResult:
    """One sampled paraphrase with its budget arithmetic."""

    tokens: tuple[str, ...]
    per_step_epsilon: float
    total_epsilon: float
    temperature: float

    @property
    def n(self) -> int:
        return len(self.tokens)

    @property
    def text(self) -> str:
        return detokenize(self.tokens)


def generate(
    model: NgramModel,
    input_text: str,
    temperature: float,
    max_len: int,
    rng: RngStream,
    delta_q: float = 1.0,
    model_weight: float = DEFAULT_MODEL_WEIGHT,
) -> GenerationResult:
    """Sample a paraphrase token by token through temperature softmax.

    Stops at the end marker or max_len. Reported budget is per-step epsilon
    (= 2 * delta_q / temperature) times the emitted length; the terminating
    marker draw is not part of the paraphrase and is not counted.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    per_step = epsilon_from_temperature(temperature, delta_q)
    bias = [t for t in tokenize(input_text) if t in model._vocab_index and t != END_TOKEN]
    context: list[str] = []
    out: list[str] = []
    while len(out) < max_len:
        lv = logits(model, context, bias, model_weight=model_weight)
        probs = softmax_with_temperature(lv, temperature)
        tok = model.vocabulary[sample_index(probs, rng)]
        if tok == END_TOKEN:
            break
        out.append(tok)
        context.append(tok)
    n = len(out)
    return GenerationResult(
        tokens=tuple(out),
        per_step_epsilon=per_step,
        total_epsilon=per_step * n,
        temperature=temperature,
    )


def perplexity(model: NgramModel, text: str) -> float:
    """exp(mean negative log-probability) of the text under the model.

    The final end-marker transition is scored like any other position.
    Tokens outside the model vocabulary are skipped (their contexts still
    shift the window), keeping the proxy defined on perturbed text.
    """
    tokens = tokenize(text)
    if not tokens:
        raise ValueError("empty text")
    k = model.order - 1
    padded = [END_TOKEN] * k + tokens + [END_TOKEN]
    log_sum = 0.0
    scored = 0
    for i in range(k, len(padded)):
        target = padded[i]
        idx = model._vocab_index.get(target)
        if idx is None:
            continue
        probs = model.conditional(padded[i - k : i])
        log_sum += float(np.log(probs[idx]))
        scored += 1
    return float(np.exp(-log_sum / scored))
