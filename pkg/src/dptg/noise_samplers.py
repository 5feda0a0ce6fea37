"""Additive noise for embedding perturbation, with reproducible streams.

The Euclidean perturbation samples from the multivariate distribution with
density proportional to exp(-eps * ||z||): a direction uniform on the unit
sphere scaled by a Gamma(dim, 1/eps) radius. For ball geometry the same
vector is applied in the tangent space at the base point (treated as
ambient coordinates) and the result is radially projected back into the
open ball when it escapes. The ball variant is a pragmatic construction
with no closed-form guarantee attached; its privacy behaviour is checked
empirically by the audit tooling, not asserted analytically.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embedding_store import BALL_RADIUS_CAP, Geometry, project_into_ball

_MASK64 = (1 << 64) - 1


@dataclass
class RngStream:
    """Counter-based random stream addressed by (seed, stream_id).

    Identical (seed, stream_id) pairs reproduce identical sample sequences
    across runs. Distinct stream ids may be consumed concurrently; a single
    stream must not be shared between concurrent consumers.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def child(self, stream_id: int) -> "RngStream":
        """Fresh stream under the same seed, for per-record parallelism."""
        return RngStream(self.seed, stream_id)


@dataclass(frozen=True)
class NoiseSpec:
    """Per-word privacy parameter and the space the noise lives in."""

    epsilon: float
    dim: int
    geometry: Geometry = Geometry.EUCLIDEAN

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")


def sample_unit_direction(dim: int, rng: RngStream, size: int | None = None) -> np.ndarray:
    """Direction(s) uniform on the unit sphere (normalized Gaussian vector)."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    n = 1 if size is None else size
    g = rng.generator.standard_normal((n, dim))
    norms = np.linalg.norm(g, axis=1)
    while np.any(norms == 0.0):  # probability-zero guard
        bad = norms == 0.0
        g[bad] = rng.generator.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(g, axis=1)
    out = g / norms[:, None]
    return out[0] if size is None else out


def _standard_gamma(gen: np.random.Generator, shape: float, n: int) -> np.ndarray:
    """Gamma(shape, 1) variates for shape >= 1.

    Marsaglia-Tsang (2000) squeeze/rejection sampler, pinned here rather
    than delegated so the draw sequence depends only on this code and the
    Philox bit stream.
    """
    if shape < 1.0:
        raise ValueError("sampler requires shape >= 1")
    d = shape - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    out = np.empty(n, dtype=np.float64)
    filled = 0
    while filled < n:
        todo = n - filled
        batch = todo + max(2, todo // 16)  # acceptance rate is ~0.95+
        x = gen.standard_normal(batch)
        v = (1.0 + c * x) ** 3
        u = gen.random(batch)
        positive = v > 0.0
        squeeze = u < 1.0 - 0.0331 * x**4
        with np.errstate(divide="ignore", invalid="ignore"):
            full = np.log(u) < 0.5 * x * x + d * (1.0 - v + np.log(np.where(positive, v, 1.0)))
        accept = positive & (squeeze | full)
        got = v[accept] * d
        take = min(got.shape[0], todo)
        out[filled : filled + take] = got[:take]
        filled += take
    return out


def sample_laplace_radius(
    dim: int, epsilon: float, rng: RngStream, size: int | None = None
) -> float | np.ndarray:
    """Radius law of the density exp(-eps * ||z||): Gamma(dim, scale 1/eps).

    Mean dim/eps, so large budgets shrink the perturbation toward zero.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    n = 1 if size is None else size
    r = _standard_gamma(rng.generator, float(dim), n) / epsilon
    return float(r[0]) if size is None else r


def sample_noise(spec: NoiseSpec, base_point: np.ndarray, rng: RngStream) -> np.ndarray:
    """Noise vector eta such that base_point + eta is the perturbed embedding.

    Euclidean: eta = radius * direction, independent of the base point.
    Poincare ball: the same Laplace vector perturbs the base point in
    ambient coordinates and the sum is projected back inside the ball, so
    eta depends on the base point and base_point + eta always has norm < 1.
    """
    base_point = np.asarray(base_point, dtype=np.float64)
    if base_point.shape != (spec.dim,):
        raise ValueError(f"base_point must have shape ({spec.dim},)")
    direction = sample_unit_direction(spec.dim, rng)
    radius = sample_laplace_radius(spec.dim, spec.epsilon, rng)
    eta = radius * direction
    if spec.geometry is Geometry.EUCLIDEAN:
        return eta
    if float(np.linalg.norm(base_point)) >= 1.0:
        raise ValueError("base point must lie inside the unit ball")
    perturbed = project_into_ball(base_point + eta, BALL_RADIUS_CAP)
    return perturbed - base_point
