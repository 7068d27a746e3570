"""Random right-embeddings ``Gamma`` of shape ``p x m``.

Two laws are supported: i.i.d. Gaussian entries with variance ``1/m`` and
Haar-distributed matrices on the Stiefel manifold (orthonormal columns).
Randomness is always routed through :func:`make_rng`, so a replicate can be
regenerated from ``(root_seed, step, replicate)`` alone.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .linalg import qr_reduced


class Law(str, enum.Enum):
    GAUSSIAN = "gaussian"
    HAAR = "haar"


def make_rng(seed, *keys: int) -> np.random.Generator:
    """Independent PCG64 stream for ``seed`` and an optional key path.

    ``make_rng(root, k, i)`` gives the stream of replicate ``i`` at step ``k``.
    Streams for different key paths are statistically independent and do not
    depend on the order in which they are requested.
    """
    if isinstance(seed, np.random.Generator):
        if keys:
            raise TypeError("key paths need an integer root seed")
        return seed
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class Embedding:
    matrix: np.ndarray
    law: Law
    seed: int | None = None

    @property
    def shape(self):
        return self.matrix.shape


def _check_dims(p: int, m: int) -> None:
    if not 1 <= m <= p:
        raise ValueError(f"need 1 <= m <= p, got p={p}, m={m}")


def _seed_of(rng):
    return None if isinstance(rng, np.random.Generator) else int(rng)


def gaussian_embedding(p: int, m: int, rng) -> Embedding:
    """``p x m`` matrix with i.i.d. ``N(0, 1/m)`` entries."""
    _check_dims(p, m)
    gen = make_rng(rng)
    g = gen.standard_normal((p, m)) / np.sqrt(m)
    return Embedding(g, Law.GAUSSIAN, _seed_of(rng))


def haar_stiefel(p: int, m: int, rng) -> Embedding:
    """Haar-distributed ``p x m`` matrix with orthonormal columns.

    Obtained as the ``Q`` factor of a standard Gaussian matrix; the
    nonnegative-``R``-diagonal gauge is what makes ``Q`` exactly Haar.
    """
    _check_dims(p, m)
    gen = make_rng(rng)
    while True:
        q, _, deficient = qr_reduced(gen.standard_normal((p, m)))
        if not deficient:
            return Embedding(q, Law.HAAR, _seed_of(rng))


def draw_embedding(law, p: int, m: int, rng) -> Embedding:
    law = Law(law)
    if law is Law.HAAR:
        return haar_stiefel(p, m, rng)
    return gaussian_embedding(p, m, rng)


def haar_factor(gamma: float, nu: float) -> float:
    """Limit of ``1/sigma_min(Gamma_1)`` for Haar embeddings.

    ``gamma = m/p`` and ``nu = l/p`` with ``0 < gamma < nu <= 1``.
    """
    if not 0 < gamma < nu <= 1:
        raise ValueError(f"need 0 < gamma < nu <= 1, got gamma={gamma}, nu={nu}")
    return (np.sqrt(nu * (1 - gamma)) + np.sqrt(gamma * (1 - nu))) / (nu - gamma)


def gaussian_factor(gamma: float, nu: float) -> float:
    """Limit of ``sigma_max(G) / sigma_min(G_1)`` for Gaussian embeddings."""
    if not 0 < gamma < nu <= 1:
        raise ValueError(f"need 0 < gamma < nu <= 1, got gamma={gamma}, nu={nu}")
    return (1 + np.sqrt(gamma)) / (np.sqrt(nu) - np.sqrt(gamma))


def beta_tail_bound(ell: int, eps: float) -> float:
    return 4.0 * np.exp(-(eps**2) * ell / 64.0)


def beta_tail_check(ell: int, p: int, eps: float, draws: int, rng):
    """Empirical ``P[|Z - l/p| > eps l/p]`` for ``Z ~ Beta(l/2, (p-l)/2)``.

    ``Z`` is sampled as ``X / (X + Y)`` with independent ``X ~ chi2(l)`` and
    ``Y ~ chi2(p - l)``.  Returns ``(empirical_prob, bound)`` where ``bound``
    is ``4 exp(-eps^2 l / 64)``.
    """
    if not 1 <= ell < p:
        raise ValueError(f"need 1 <= ell < p, got ell={ell}, p={p}")
    eps_max = min(1.0, (p - ell) / ell)
    if not 0 < eps <= eps_max:
        raise ValueError(f"eps={eps} outside (0, {eps_max}]")
    gen = make_rng(rng)
    x = gen.chisquare(ell, size=draws)
    y = gen.chisquare(p - ell, size=draws)
    z = x / (x + y)
    mean = ell / p
    empirical = float(np.mean(np.abs(z - mean) > eps * mean))
    return empirical, beta_tail_bound(ell, eps)
