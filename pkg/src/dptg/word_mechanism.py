"""Per-token embedding perturbation with nearest-neighbor substitution.

Each in-vocabulary token's embedding is displaced by Laplace-family noise
and replaced by the word nearest to the noisy point. Out-of-vocabulary
tokens cannot be perturbed: the Ignore policy passes them through (which
breaks the formal guarantee and is flagged loudly), the Remove policy
drops them (which changes the output length instead).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .embedding_store import EmbeddingStore, Geometry
from .noise_samplers import NoiseSpec, RngStream, sample_noise

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


class OovPolicy(str, Enum):
    IGNORE = "ignore"
    REMOVE = "remove"


@dataclass(frozen=True)
class MechanismConfig:
    """Per-word budget, geometry, OOV handling, and the run seed."""

    epsilon: float
    geometry: Geometry = Geometry.EUCLIDEAN
    oov_policy: OovPolicy = OovPolicy.IGNORE
    seed: int = 0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        object.__setattr__(self, "geometry", Geometry(self.geometry))
        object.__setattr__(self, "oov_policy", OovPolicy(self.oov_policy))


@dataclass(frozen=True)
class Substitution:
    """Per-position record: what replaced what, and how far the vector moved.

    `replacement` is None for OOV tokens dropped under the Remove policy;
    `moved` is None whenever no perturbation happened.
    """

    original: str
    replacement: str | None
    moved: float | None
    oov: bool

    def as_dict(self) -> dict:
        return {
            "original": self.original,
            "replacement": self.replacement,
            "moved": self.moved,
            "oov": self.oov,
        }


@dataclass(frozen=True)
class BudgetReport:
    """Linear budget accounting: one epsilon per perturbed token."""

    per_word_epsilon: float
    perturbed_token_count: int
    total_epsilon: float
    oov_passthrough_count: int = 0
    dp_violation: str | None = None

    def as_dict(self) -> dict:
        return {
            "per_word_epsilon": self.per_word_epsilon,
            "perturbed_token_count": self.perturbed_token_count,
            "total_epsilon": self.total_epsilon,
            "oov_passthrough_count": self.oov_passthrough_count,
            "dp_violation": self.dp_violation,
        }


@dataclass(frozen=True)
class AnonymizedSentence:
    output_tokens: tuple[str, ...]
    substitutions: tuple[Substitution, ...]
    budget: BudgetReport


def tokenize(text: str, lowercase: bool = True) -> list[str]:
    """Split into word tokens with punctuation kept as separate tokens."""
    if lowercase:
        text = text.lower()
    return _TOKEN_RE.findall(text)


def detokenize(tokens: Sequence[str]) -> str:
    """Join tokens back into text, attaching punctuation to the left word."""
    parts: list[str] = []
    for tok in tokens:
        if parts and len(tok) == 1 and not tok.isalnum() and tok != "_":
            parts[-1] += tok
        else:
            parts.append(tok)
    return " ".join(parts)


def budget_report(n: int, epsilon: float, oov_passthrough: int = 0,
                  policy: OovPolicy = OovPolicy.IGNORE) -> BudgetReport:
    """Total budget for n independent per-token applications: n * epsilon."""
    if n < 0:
        raise ValueError("token count must be >= 0")
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    violation = None
    if oov_passthrough > 0 and policy is OovPolicy.IGNORE:
        violation = (
            f"{oov_passthrough} out-of-vocabulary token(s) passed through unperturbed; "
            "the formal privacy guarantee does not cover them"
        )
    return BudgetReport(
        per_word_epsilon=epsilon,
        perturbed_token_count=n,
        total_epsilon=epsilon * n,
        oov_passthrough_count=oov_passthrough,
        dp_violation=violation,
    )


def anonymize_sentence(
    tokens: Sequence[str],
    store: EmbeddingStore,
    config: MechanismConfig,
    rng: RngStream | None = None,
) -> AnonymizedSentence:
    """Perturb every in-vocabulary token and substitute its nearest word.

    Deterministic given (tokens, config, rng stream). Under the Ignore
    policy the output has exactly the input's length; under Remove, OOV
    positions are dropped from the output but still appear in the
    substitution records with replacement None.
    """
    if len(tokens) == 0:
        raise ValueError("empty token sequence")
    if store.geometry is not config.geometry:
        raise ValueError(
            f"store geometry {store.geometry.value} != config geometry {config.geometry.value}"
        )
    if rng is None:
        rng = RngStream(config.seed, 0)
    spec = NoiseSpec(config.epsilon, store.dim, config.geometry)

    oov_passthrough = 0
    perturbed_positions: list[int] = []
    perturbed_points: list[np.ndarray] = []
    moved: list[float] = []
    slots: list[Substitution | None] = [None] * len(tokens)

    for pos, tok in enumerate(tokens):
        vec = store.lookup(tok)
        if vec is None:
            if config.oov_policy is OovPolicy.IGNORE:
                oov_passthrough += 1
                slots[pos] = Substitution(tok, tok, None, oov=True)
            else:
                slots[pos] = Substitution(tok, None, None, oov=True)
            continue
        eta = sample_noise(spec, vec, rng)
        point = vec + eta
        perturbed_positions.append(pos)
        perturbed_points.append(point)
        moved.append(store.distance(vec, point))

    if perturbed_points:
        indices = store.nearest_index(np.vstack(perturbed_points))
        for pos, idx, dist in zip(perturbed_positions, indices, moved):
            slots[pos] = Substitution(tokens[pos], store.words[int(idx)], float(dist), oov=False)

    output = tuple(s.replacement for s in slots if s.replacement is not None)
    budget = budget_report(
        len(perturbed_positions), config.epsilon, oov_passthrough, config.oov_policy
    )
    return AnonymizedSentence(output, tuple(slots), budget)


def self_substitution_rate(
    store: EmbeddingStore,
    config: MechanismConfig,
    sample_tokens: Sequence[str],
    trials: int,
    rng: RngStream,
) -> float:
    """Fraction of (token, trial) pairs where the mechanism keeps the word.

    Diagnostic for how destructive a budget is; all sample tokens must be
    in vocabulary.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    for tok in sample_tokens:
        if tok not in store:
            raise KeyError(f"sample token {tok!r} not in vocabulary")
    spec = NoiseSpec(config.epsilon, store.dim, config.geometry)
    hits = 0
    total = 0
    for _ in range(trials):
        points = []
        for tok in sample_tokens:
            vec = store.lookup(tok)
            points.append(vec + sample_noise(spec, vec, rng))
        indices = store.nearest_index(np.vstack(points))
        for tok, idx in zip(sample_tokens, indices):
            hits += store.words[int(idx)] == tok
            total += 1
    return hits / total
