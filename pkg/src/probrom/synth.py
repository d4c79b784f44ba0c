"""Synthetic model problem: sine basis, geometric latent variances, constant mean, white noise.

Every realization ``k`` draws from its own Philox stream keyed by
``(seed, k)``, so an ensemble is bit-reproducible and does not depend on how
generation is split across workers.
"""

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SyntheticSpec:
    """Generative process ``y = phi @ w + mu + eps``.

    Latent ``j`` (1-based) has variance ``variance_base ** -(j - 1)``; the
    mean is the constant ``mean_value``.
    """

    d: int = 100
    m_gen: int = 10
    variance_base: float = 2.0
    mean_value: float = 1.0
    sigma2_eps: float = 0.1
    n: int = 10000
    seed: int = 0

    def __post_init__(self):
        if self.d < 3:
            raise ValueError(f"d must be at least 3, got {self.d}")
        if not 1 <= self.m_gen <= self.d - 2:
            raise ValueError(f"m_gen={self.m_gen} outside [1, d - 2 = {self.d - 2}]")
        if self.variance_base <= 0:
            raise ValueError("variance_base must be positive")
        if self.sigma2_eps < 0:
            raise ValueError("sigma2_eps must be non-negative")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    @property
    def latent_variances(self):
        return self.variance_base ** -np.arange(self.m_gen, dtype=np.float64)

    @property
    def mean(self):
        return np.full(self.d, float(self.mean_value))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, doc):
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown spec fields: {sorted(unknown)}")
        return cls(**doc)


@dataclass(frozen=True, eq=False)
class DataEnsemble:
    """``n`` realizations of dimension ``d`` with optional noise-free truth and latents."""

    realizations: np.ndarray
    truth: Optional[np.ndarray] = None
    latents: Optional[np.ndarray] = None
    spec: Optional[SyntheticSpec] = None

    @property
    def n(self):
        return self.realizations.shape[0]

    @property
    def d(self):
        return self.realizations.shape[1]

    def __len__(self):
        return self.n


def sine_basis(d, m):
    """Unit-norm columns ``sin(j pi x)``, ``j = 1..m``, on ``d`` points of [0, 1] including endpoints."""
    if not 1 <= m <= d - 2:
        raise ValueError(f"m={m} outside [1, d - 2 = {d - 2}]; higher sines are not orthogonal on this grid")
    x = np.arange(d) / (d - 1)
    B = np.sin(np.pi * np.outer(x, np.arange(1, m + 1)))
    return B / np.linalg.norm(B, axis=0)


def gaussian_sampler(seed, stream=0):
    """Deterministic standard-normal source for ``(seed, stream)``.

    Returns a :class:`numpy.random.Generator` on a Philox counter-based bit
    generator; draw with ``.standard_normal(size)``.
    """
    key = np.array([int(seed) & _MASK64, int(stream) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def generate(spec, start=0, stop=None):
    """Draw realizations ``start..stop-1`` of ``spec`` (all ``n`` by default).

    Realization ``k`` uses stream ``k``: first ``m_gen`` latent draws, then
    ``d`` noise draws. Any split of ``[0, n)`` concatenates to the same ensemble.
    """
    stop = spec.n if stop is None else stop
    if not 0 <= start <= stop <= spec.n:
        raise ValueError(f"invalid realization range [{start}, {stop})")
    phi = sine_basis(spec.d, spec.m_gen)
    sd_w = np.sqrt(spec.latent_variances)
    sd_eps = np.sqrt(spec.sigma2_eps)
    count = stop - start
    Z = np.empty((count, spec.m_gen + spec.d))
    for i, k in enumerate(range(start, stop)):
        Z[i] = gaussian_sampler(spec.seed, k).standard_normal(spec.m_gen + spec.d)
    W = Z[:, : spec.m_gen] * sd_w
    # fixed-order accumulation: a BLAS product may block rows differently per batch size
    truth = np.broadcast_to(spec.mean, (count, spec.d)).copy()
    for j in range(spec.m_gen):
        truth += W[:, j, None] * phi[:, j]
    Y = truth + sd_eps * Z[:, spec.m_gen:]
    return DataEnsemble(realizations=Y, truth=truth, latents=W, spec=spec)
