"""Increment functions: exact, Tikhonov, truncated SVD and sketched.

Each maps a design matrix ``J`` (``n x p``) and right-hand side ``f``
(length ``n``) to an increment ``eta`` of length ``p``.  The sketched
variant restricts ``eta`` to the range of a random ``p x m`` embedding and
averages ``q`` independent replicates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.linalg

from . import linalg
from .embeddings import Embedding, Law, draw_embedding, make_rng


@dataclass(frozen=True)
class Exact:
    pass


@dataclass(frozen=True)
class Tikhonov:
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"Tikhonov alpha must be > 0, got {self.alpha}")


@dataclass(frozen=True)
class TruncSVD:
    r: int

    def __post_init__(self):
        if self.r < 1:
            raise ValueError(f"truncation rank must be >= 1, got {self.r}")


@dataclass(frozen=True)
class Sketch:
    m: int
    q: int = 1
    law: Law = Law.HAAR

    def __post_init__(self):
        if self.m < 1 or self.q < 1:
            raise ValueError(f"Sketch needs m >= 1 and q >= 1, got m={self.m}, q={self.q}")
        object.__setattr__(self, "law", Law(self.law))


IncrementMethod = Union[Exact, Tikhonov, TruncSVD, Sketch]


@dataclass(frozen=True)
class IncrementDiagnostics:
    condition: float
    residual_norm: float
    increment_norm: float


class IncrementFailure(ArithmeticError):
    def __init__(self, message, diagnostics: IncrementDiagnostics | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics


def _diagnostics(J, f, eta, condition) -> IncrementDiagnostics:
    return IncrementDiagnostics(
        float(condition),
        float(np.linalg.norm(J @ eta - f)),
        float(np.linalg.norm(eta)),
    )


def exact_increment(J, f) -> np.ndarray:
    return linalg.lstsq_minnorm(J, f)


def tikhonov_increment(J, f, alpha: float) -> np.ndarray:
    return linalg.tikhonov_solve(J, f, alpha)


def tsvd_increment(J, f, r: int) -> np.ndarray:
    return linalg.tsvd_solve(J, f, r)


def _sketched(J: np.ndarray, f: np.ndarray, gamma: np.ndarray):
    JG = J @ gamma
    fac = linalg.svd(JG)
    s = fac.s
    kappa = float(s[0] / s[-1]) if s[-1] > 0 else float("inf")
    if not s[-1] > linalg.RANK_TOL * s[0]:
        raise IncrementFailure(
            f"sketched system J @ Gamma is rank deficient (kappa={kappa:.3e})",
            IncrementDiagnostics(kappa, float("nan"), float("nan")),
        )
    v = fac.v @ ((fac.u.T @ f) / s)
    return gamma @ v, kappa


def sketched_increment(J, f, gamma) -> np.ndarray:
    """``Gamma (J Gamma)^+ f``: best increment within ``Range(Gamma)``."""
    J = linalg.as_matrix(J, "J")
    f = np.asarray(f, dtype=np.float64).reshape(-1)
    g = gamma.matrix if isinstance(gamma, Embedding) else np.asarray(gamma, dtype=np.float64)
    if g.ndim == 1:
        g = g[:, None]
    if g.shape[0] != J.shape[1]:
        raise ValueError(f"embedding has {g.shape[0]} rows, J has {J.shape[1]} columns")
    return _sketched(J, f, g)[0]


def randomized_increment(J, f, method: Sketch, seed, step: int = 0):
    """Average of ``method.q`` sketched increments with fresh embeddings.

    Replicate ``i`` at time step ``step`` draws its embedding from the stream
    ``make_rng(seed, step, i)``; if ``seed`` is a ``Generator`` the replicates
    are drawn from it in order instead.  Returns ``(eta, diagnostics)`` with
    the largest ``kappa(J Gamma_i)`` over replicates.
    """
    J = linalg.as_matrix(J, "J")
    f = np.asarray(f, dtype=np.float64).reshape(-1)
    p = J.shape[1]
    if method.m > p:
        raise ValueError(f"sketch dimension m={method.m} exceeds p={p}")
    total = np.zeros(p)
    worst = 0.0
    for i in range(method.q):
        rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed, step, i)
        gamma = draw_embedding(method.law, p, method.m, rng).matrix
        try:
            eta_i, kappa = _sketched(J, f, gamma)
        except IncrementFailure as exc:
            raise IncrementFailure(f"replicate {i}: {exc}", exc.diagnostics) from exc
        total += eta_i
        worst = max(worst, kappa)
    eta = total / method.q
    return eta, _diagnostics(J, f, eta, worst)


def _tikhonov_with_condition(J, f, alpha):
    gram = J.T @ J
    gram[np.diag_indices_from(gram)] += alpha
    try:
        chol, lower = scipy.linalg.cho_factor(gram, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise IncrementFailure(f"Tikhonov system not positive definite: {exc}") from exc
    eta = scipy.linalg.cho_solve((chol, lower), J.T @ f, check_finite=False)
    # O(p^2) 1-norm estimate of cond(L), i.e. sqrt(cond(J^T J + alpha I)).
    rcond, _ = scipy.linalg.lapack.dtrcon(chol, norm="1", uplo="L" if lower else "U")
    return eta, (1.0 / rcond if rcond > 0 else float("inf"))


def compute_increment(J, f, method: IncrementMethod, seed=0, step: int = 0):
    """Dispatch on ``method``; returns ``(eta, IncrementDiagnostics)``.

    Linear-algebra failures are re-raised as :class:`IncrementFailure`.
    """
    J = linalg.as_matrix(J, "J")
    f = np.asarray(f, dtype=np.float64).reshape(-1)
    try:
        if isinstance(method, Sketch):
            return randomized_increment(J, f, method, seed, step)
        if isinstance(method, Tikhonov):
            eta, condition = _tikhonov_with_condition(J, f, method.alpha)
            return eta, _diagnostics(J, f, eta, condition)
        fac = linalg.svd(J)
        s = fac.s
        condition = s[0] / s[-1] if s[-1] > 0 else float("inf")
        if isinstance(method, TruncSVD):
            if method.r > s.size:
                raise IncrementFailure(f"truncation rank {method.r} exceeds {s.size}")
            if s[method.r - 1] <= linalg.RANK_TOL * s[0]:
                raise IncrementFailure(f"truncation rank {method.r} exceeds numerical rank")
            keep = method.r
        elif isinstance(method, Exact):
            cutoff = np.finfo(np.float64).eps * max(J.shape) * s[0]
            keep = int(np.count_nonzero(s > cutoff))
        else:
            raise TypeError(f"unknown increment method {method!r}")
        eta = fac.v[:, :keep] @ ((fac.u[:, :keep].T @ f) / s[:keep])
        return eta, _diagnostics(J, f, eta, condition)
    except linalg.LinAlgFailure as exc:
        raise IncrementFailure(str(exc)) from exc
