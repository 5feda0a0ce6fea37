"""Temperature-controlled softmax sampling as a private selection mechanism.

Sampling the next token from softmax(u / T) is exactly the discrete
exponential mechanism with quality scores u and budget eps = 2 * dq / T,
where dq is the score sensitivity. Keeping logits inside [0, 1] bounds
dq by 1. This module provides the sampling primitives, the eps <-> T
conversion, and a brute-force auditor that checks the indistinguishability
bound exhaustively on finite quality tables.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .noise_samplers import RngStream

RATIO_SLACK = 1e-9  # absolute slack on probability ratios, for float rounding


@dataclass(frozen=True)
class LogitVector:
    """Score vector over the output vocabulary; clamped means entries in [0, 1]."""

    values: np.ndarray
    clamped: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.clamped:
            v = self.values
            if v.size and (v.min() < -1e-12 or v.max() > 1.0 + 1e-12):
                raise ValueError("clamped logits must lie in [0, 1]")


@dataclass(frozen=True)
class DpSamplerConfig:
    """Temperature, score sensitivity, and vocabulary size of one sampler."""

    temperature: float
    sensitivity: float = 1.0
    vocab_size: int = 0

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError("temperature must be > 0")
        if not self.sensitivity > 0:
            raise ValueError("sensitivity must be > 0")

    @property
    def epsilon(self) -> float:
        return epsilon_from_temperature(self.temperature, self.sensitivity)


def _values(logits: np.ndarray | LogitVector) -> np.ndarray:
    if isinstance(logits, LogitVector):
        return logits.values
    return np.asarray(logits, dtype=np.float64)


def softmax_with_temperature(logits: np.ndarray | LogitVector, temperature: float) -> np.ndarray:
    """softmax(u / T), numerically stabilized by max subtraction.

    Higher temperature smooths the distribution toward uniform; the output
    is a strictly positive vector summing to 1.
    """
    if not temperature > 0:
        raise ValueError("temperature must be > 0")
    u = _values(logits)
    if u.size == 0:
        raise ValueError("empty logit vector")
    if not np.all(np.isfinite(u)):
        raise ValueError("logits must be finite")
    z = u / temperature
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def epsilon_from_temperature(temperature: float, delta_q: float = 1.0) -> float:
    """Budget spent by one softmax draw at this temperature: eps = 2*dq/T."""
    if not temperature > 0:
        raise ValueError("temperature must be > 0")
    if not delta_q > 0:
        raise ValueError("delta_q must be > 0")
    return 2.0 * delta_q / temperature

def temperature_from_epsilon(epsilon: float, delta_q: float = 1.0) -> float:
    """Inverse of epsilon_from_temperature: T = 2*dq/eps."""
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    if not delta_q > 0:
        raise ValueError("delta_q must be > 0")
    return 2.0 * delta_q / epsilon


def clamp_logits(raw: np.ndarray | Sequence[float]) -> LogitVector:
    """Force a score vector into [0, 1] while preserving its ranking.

    Constant vectors map to all-0.5 (any constant is equivalent after
    softmax). Vectors already inside [0, 1] pass through unchanged; anything
    else is min-max rescaled, which keeps the argmax invariant.
    """
    u = np.asarray(raw, dtype=np.float64)
    if u.size == 0:
        raise ValueError("empty logit vector")
    if not np.all(np.isfinite(u)):
        raise ValueError("logits must be finite")
    lo, hi = float(u.min()), float(u.max())
    if lo == hi:
        return LogitVector(np.full_like(u, 0.5), clamped=True)
    if lo >= 0.0 and hi <= 1.0:
        return LogitVector(u.copy(), clamped=True)
    return LogitVector((u - lo) / (hi - lo), clamped=True)


def rescale_unit_interval(raw: np.ndarray | Sequence[float]) -> LogitVector:
    """Min-max rescale onto [0, 1] unconditionally (constants become 0.5)."""
    u = np.asarray(raw, dtype=np.float64)
    if u.size == 0:
        raise ValueError("empty logit vector")
    if not np.all(np.isfinite(u)):
        raise ValueError("logits must be finite")
    lo, hi = float(u.min()), float(u.max())
    if lo == hi:
        return LogitVector(np.full_like(u, 0.5), clamped=True)
    return LogitVector((u - lo) / (hi - lo), clamped=True)


def sample_index(probs: np.ndarray, rng: RngStream, size: int | None = None) -> int | np.ndarray:
    """Draw index(es) with the given probabilities (inverse-CDF, one uniform each)."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probs must be a non-empty vector")
    if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("probs must be non-negative and sum to 1")
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    u = rng.generator.random() if size is None else rng.generator.random(size)
    out = np.searchsorted(cdf, u, side="right")
    return int(out) if size is None else out


class QualityTable:
    """Finite quality function: score q[x, y] for every input/output pair.

    Adjacency is the explicit set of input index pairs the privacy bound is
    quantified over; the table does not guess it. Sensitivity is the largest
    score difference across any adjacent pair, maximised over outputs.
    """

    def __init__(
        self,
        inputs: Sequence[str],
        outputs: Sequence[str],
        q: np.ndarray,
        adjacency: Sequence[tuple[int, int]],
    ):
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (len(inputs), len(outputs)):
            raise ValueError(f"q must have shape ({len(inputs)}, {len(outputs)})")
        if len(inputs) == 0 or len(outputs) == 0:
            raise ValueError("table must be non-empty")
        if not np.all(np.isfinite(q)):
            raise ValueError("q must be finite")
        pairs = []
        seen = set()
        for i, j in adjacency:
            if not (0 <= i < len(inputs)) or not (0 <= j < len(inputs)):
                raise ValueError(f"adjacency pair ({i}, {j}) out of range")
            if i == j:
                raise ValueError("adjacency pairs must be distinct inputs")
            key = (min(i, j), max(i, j))
            if key not in seen:
                seen.add(key)
                pairs.append(key)
        self.inputs = list(inputs)
        self.outputs = list(outputs)
        self.q = q
        self.adjacency = pairs

    def input_index(self, label: str) -> int:
        try:
            return self.inputs.index(label)
        except ValueError:
            raise KeyError(f"unknown input label {label!r}") from None

    def sensitivity(self) -> float:
        """Largest |q(x1, y) - q(x2, y)| over adjacent pairs and outputs."""
        if not self.adjacency:
            return 0.0
        diffs = [np.abs(self.q[i] - self.q[j]).max() for i, j in self.adjacency]
        return float(max(diffs))

    @classmethod
    def all_pairs(
        cls, inputs: Sequence[str], outputs: Sequence[str], q: np.ndarray
    ) -> "QualityTable":
        """Table where every pair of inputs is adjacent (local-model view)."""
        pairs = [(i, j) for i in range(len(inputs)) for j in range(i + 1, len(inputs))]
        return cls(inputs, outputs, q, pairs)

    def to_json_dict(self) -> dict:
        return {
            "inputs": self.inputs,
            "outputs": self.outputs,
            "q": [float(x) for x in self.q.reshape(-1)],
            "adjacency": [[i, j] for i, j in self.adjacency],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "QualityTable":
        inputs = obj["inputs"]
        outputs = obj["outputs"]
        q = np.array(obj["q"], dtype=np.float64).reshape(len(inputs), len(outputs))
        adjacency = [tuple(p) for p in obj["adjacency"]]
        return cls(inputs, outputs, q, adjacency)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "QualityTable":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def exponential_mechanism_pmf(
    table: QualityTable, input_label: str, epsilon: float
) -> np.ndarray:
    """Selection probabilities exp(eps * q(x, y) / (2 dq)) / normaliser.

    dq is the table's own sensitivity. A zero-sensitivity table carries no
    signal to privatise; the pmf degenerates to uniform and a warning is
    emitted rather than dividing by zero.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    row = table.q[table.input_index(input_label)]
    dq = table.sensitivity()
    if dq == 0.0:
        warnings.warn(
            "quality table has zero sensitivity; returning the uniform pmf",
            RuntimeWarning,
            stacklevel=2,
        )
        return np.full(row.shape, 1.0 / row.size)
    z = (epsilon / (2.0 * dq)) * row
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def _log_rows(pmf: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(pmf)


@dataclass(frozen=True)
class AuditReport:
    """Outcome of an exhaustive ratio check against the e^eps bound."""

    epsilon: float
    max_ratio: float
    bound: float
    passed: bool
    worst_pair: tuple[str, str]
    worst_output: str
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "max_ratio": self.max_ratio,
            "bound": self.bound,
            "pass": self.passed,
            "worst_pair": list(self.worst_pair),
            "worst_output": self.worst_output,
            "note": self.note,
        }


def verify_dp_bound(
    table: QualityTable,
    epsilon: float,
    pmf: np.ndarray | Callable[[str], np.ndarray] | None = None,
    slack: float = RATIO_SLACK,
) -> AuditReport:
    """Exhaustively check Pr[M(x1)=y] <= e^eps * Pr[M(x2)=y] over the table.

    By default audits the exponential mechanism built from the table at the
    same epsilon; pass `pmf` (a row-stochastic matrix over table.inputs x
    table.outputs, or a callable input label -> probability vector) to audit
    an arbitrary mechanism against the table's adjacency. Ratios are
    compared in log space so near-underflow probabilities stay exact.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    n_in, n_out = table.q.shape
    if n_in * n_out > 1_000_000:
        raise ValueError("table too large for exhaustive audit")
    if pmf is None:
        rows = np.vstack([exponential_mechanism_pmf(table, x, epsilon) for x in table.inputs])
    elif callable(pmf):
        rows = np.vstack([np.asarray(pmf(x), dtype=np.float64) for x in table.inputs])
    else:
        rows = np.asarray(pmf, dtype=np.float64)
    if rows.shape != (n_in, n_out):
        raise ValueError(f"pmf must have shape ({n_in}, {n_out})")
    if np.any(rows < 0) or np.any(np.abs(rows.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("pmf rows must be distributions")

    log_rows = _log_rows(rows)
    log_bound = float(np.logaddexp(epsilon, np.log(slack)))  # log(e^eps + slack)
    best = -np.inf
    worst_pair = ("", "")
    worst_output = ""
    for i, j in table.adjacency:
        gaps = np.abs(log_rows[i] - log_rows[j])  # both directions at once
        k = int(np.argmax(gaps))
        if gaps[k] > best:
            best = float(gaps[k])
            worst_pair = (table.inputs[i], table.inputs[j])
            worst_output = table.outputs[k]
    if not table.adjacency:
        best = 0.0
    max_ratio = float(np.exp(best)) if best < 700 else float("inf")
    passed = best <= log_bound
    note = "" if table.adjacency else "no adjacent pairs: bound holds vacuously"
    return AuditReport(
        epsilon=float(epsilon),
        max_ratio=max_ratio,
        bound=float(np.exp(epsilon)) if epsilon < 700 else float("inf"),
        passed=bool(passed),
        worst_pair=worst_pair,
        worst_output=worst_output,
        note=note,
    )


def verify_sequence_bound(
    tables: Sequence[QualityTable],
    epsilon: float,
    slack: float = RATIO_SLACK,
) -> AuditReport:
    """Audit n independent selection steps jointly against e^(n*eps).

    All step tables must share the same inputs and adjacency; outputs may
    differ per step. The product distribution over output sequences is
    enumerated exhaustively, so keep the step count and vocabularies tiny.
    """
    if not tables:
        raise ValueError("need at least one step table")
    base = tables[0]
    for t in tables[1:]:
        if t.inputs != base.inputs or t.adjacency != base.adjacency:
            raise ValueError("step tables must share inputs and adjacency")
    n = len(tables)
    total = 1
    for t in tables:
        total *= len(t.outputs)
        if total > 1_000_000:
            raise ValueError("sequence space too large for exhaustive audit")

    step_logs = []
    for t in tables:
        rows = np.vstack([exponential_mechanism_pmf(t, x, epsilon) for x in t.inputs])
        step_logs.append(_log_rows(rows))
    # log-prob of every output sequence, built up step by step
    joint = {x: np.zeros(1) for x in range(len(base.inputs))}
    for logs in step_logs:
        joint = {x: (joint[x][:, None] + logs[x][None, :]).reshape(-1) for x in joint}

    bound_eps = n * epsilon
    log_bound = float(np.logaddexp(bound_eps, np.log(slack)))
    best = -np.inf
    worst_pair = ("", "")
    for i, j in base.adjacency:
        gap = float(np.abs(joint[i] - joint[j]).max())
        if gap > best:
            best = gap
            worst_pair = (base.inputs[i], base.inputs[j])
    if not base.adjacency:
        best = 0.0
    return AuditReport(
        epsilon=float(bound_eps),
        max_ratio=float(np.exp(best)) if best < 700 else float("inf"),
        bound=float(np.exp(bound_eps)) if bound_eps < 700 else float("inf"),
        passed=bool(best <= log_bound),
        worst_pair=worst_pair,
        worst_output="<sequence>",
        note=f"{n} composed steps",
    )
