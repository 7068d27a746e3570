"""Small dense linear-algebra kernel.

Matrices are plain ``float64`` numpy arrays; the heavy lifting (Householder
QR, bidiagonal SVD) is delegated to LAPACK through numpy/scipy.  What this
module adds on top is the set of conventions the rest of the package relies
on: a nonnegative ``R`` diagonal, explicit failure on rank deficiency, and
the minimum-norm / Tikhonov / truncated-SVD solves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

#: Relative threshold below which a singular value (or ``R`` diagonal entry)
#: counts as zero.
RANK_TOL = 1e-14


class LinAlgFailure(ArithmeticError):
    """Raised when a factorization or solve cannot produce a valid answer."""


class SvdConvergenceError(LinAlgFailure):
    def __init__(self, shape, drivers):
        self.shape = shape
        self.drivers = tuple(drivers)
        super().__init__(
            f"SVD of {shape[0]}x{shape[1]} matrix did not converge "
            f"(tried LAPACK drivers: {', '.join(self.drivers)})"
        )


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a 2-D float64 array, rejecting NaN/Inf entries."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _as_vector(b, n: int) -> np.ndarray:
    vec = np.asarray(b, dtype=np.float64).reshape(-1)
    if vec.shape[0] != n:
        raise ValueError(f"right-hand side has length {vec.shape[0]}, expected {n}")
    return vec


class QRResult(NamedTuple):
    q: np.ndarray
    r: np.ndarray
    rank_deficient: bool


def qr_reduced(a) -> QRResult:
    """Reduced QR with the sign gauge fixed so that ``diag(R) >= 0``.

    ``rank_deficient`` is set when some ``|R_ii| <= 1e-14 * ||A||_F``; the
    factors are still returned so the caller can decide what to do.
    """
    a = as_matrix(a, "A")
    n, m = a.shape
    if n < m:
        raise ValueError(f"qr_reduced needs rows >= cols, got {a.shape}")
    q, r = np.linalg.qr(a, mode="reduced")
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    r = r * signs[:, None]
    scale = np.linalg.norm(a)
    deficient = bool(np.any(np.abs(np.diag(r)) <= RANK_TOL * scale)) if m else False
    return QRResult(q, r, deficient)


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``A = U diag(s) V^T`` with ``k = min(rows, cols)``."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.v.T


def svd(a) -> SvdFactors:
    a = as_matrix(a, "A")
    tried = []
    # gesdd is fast but occasionally fails to converge; gesvd is the robust fallback.
    for driver in ("gesdd", "gesvd"):
        tried.append(driver)
        try:
            u, s, vt = scipy.linalg.svd(
                a, full_matrices=False, check_finite=False, lapack_driver=driver
            )
        except (np.linalg.LinAlgError, ValueError):
            continue
        return SvdFactors(u, s, vt.T)
    raise SvdConvergenceError(a.shape, tried)


def singular_values(a) -> np.ndarray:
    a = as_matrix(a, "A")
    try:
        return scipy.linalg.svdvals(a, check_finite=False)
    except np.linalg.LinAlgError:
        return svd(a).s


def _pinv_apply(f: SvdFactors, b: np.ndarray, keep: int) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        x = f.v[:, :keep] @ ((f.u[:, :keep].T @ b) / f.s[:keep])
    if not np.all(np.isfinite(x)):
        raise LinAlgFailure("pseudo-inverse solution overflows double precision")
    return x


def lstsq_minnorm(a, b) -> np.ndarray:
    """Minimum-norm least-squares solution ``A^+ b`` computed from the SVD.

    Singular values at or below the machine-precision cutoff
    ``eps * max(n, p) * sigma_1`` are treated as exact zeros, as in a
    standard pseudo-inverse; no further truncation is applied.
    """
    a = as_matrix(a, "A")
    b = _as_vector(b, a.shape[0])
    f = svd(a)
    if f.s.size == 0 or f.s[0] == 0.0:
        return np.zeros(a.shape[1])
    cutoff = np.finfo(np.float64).eps * max(a.shape) * f.s[0]
    keep = int(np.count_nonzero(f.s > cutoff))
    return _pinv_apply(f, b, keep)


def tikhonov_solve(a, b, alpha: float) -> np.ndarray:
    """Solve ``(A^T A + alpha I) x = A^T b`` with a Cholesky factorization."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    a = as_matrix(a, "A")
    b = _as_vector(b, a.shape[0])
    gram = a.T @ a
    if alpha:
        gram[np.diag_indices_from(gram)] += alpha
    try:
        factor = scipy.linalg.cho_factor(gram, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise LinAlgFailure(
            f"normal-equation matrix is not positive definite (alpha={alpha})"
        ) from exc
    diag = np.abs(np.diag(factor[0]))
    # Cholesky diagonal squared ~ eigenvalue scale of the Gram matrix.
    if alpha == 0 and diag.min() ** 2 <= RANK_TOL * diag.max() ** 2:
        raise LinAlgFailure(f"A^T A + alpha I is numerically singular (alpha={alpha})")
    return scipy.linalg.cho_solve(factor, a.T @ b, check_finite=False)


def tsvd_solve(a, b, r: int) -> np.ndarray:
    """Apply the pseudo-inverse of the best rank-``r`` approximation of ``A``."""
    a = as_matrix(a, "A")
    b = _as_vector(b, a.shape[0])
    k = min(a.shape)
    if not 1 <= r <= k:
        raise ValueError(f"truncation rank r={r} outside [1, {k}]")
    f = svd(a)
    if f.s[r - 1] <= RANK_TOL * f.s[0]:
        raise LinAlgFailure(
            f"truncation rank {r} exceeds numerical rank "
            f"(sigma_r/sigma_1 = {f.s[r - 1] / f.s[0]:.3e})"
        )
    return _pinv_apply(f, b, r)


def cond(a) -> float:
    """2-norm condition number ``sigma_1 / sigma_p``; ``inf`` if ``sigma_p == 0``."""
    a = as_matrix(a, "A")
    n, p = a.shape
    if n < p:
        raise ValueError(f"cond expects rows >= cols, got {a.shape}")
    s = singular_values(a)
    if s[-1] == 0.0:
        return float("inf")
    return float(s[0] / s[-1])


def numerical_rank(a, tau: float) -> int:
    """Smallest ``m`` with ``||A - [A]_m||_2 < tau ||A||_2``."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    s = singular_values(a)
    if s.size == 0 or s[0] == 0.0:
        return 0
    tail = np.append(s[1:], 0.0)  # tail[m-1] = sigma_{m+1} = ||A - [A]_m||_2
    return int(np.argmax(tail < tau * s[0])) + 1
