import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import jacobi_singular_values, power_law_matrix
from sketchstep import linalg


# --- qr_reduced -----------------------------------------------------------

def test_qr_identity():
    q, r, flag = linalg.qr_reduced(np.eye(3))
    np.testing.assert_array_equal(q, np.eye(3))
    np.testing.assert_array_equal(r, np.eye(3))
    assert not flag


def test_qr_scaled_identity():
    q, r, _ = linalg.qr_reduced(2 * np.eye(2))
    np.testing.assert_allclose(q, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(r, 2 * np.eye(2), atol=1e-15)


def test_qr_permutation_block():
    A = np.array([[0.0, 1.0], [1.0, 0.0], [0.0, 0.0]])
    q, r, _ = linalg.qr_reduced(A)
    np.testing.assert_allclose(q.T @ q, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(q @ r, A, atol=1e-12)


def test_qr_sign_gauge_and_upper_triangular(rng):
    A = rng.standard_normal((30, 12))
    q, r, flag = linalg.qr_reduced(A)
    assert np.all(np.diag(r) >= 0)
    np.testing.assert_array_equal(np.tril(r, -1), 0)
    assert np.linalg.norm(q @ r - A) <= 1e-10 * np.linalg.norm(A)
    assert not flag


def test_qr_flags_rank_deficiency():
    A = np.ones((4, 2))
    assert linalg.qr_reduced(A).rank_deficient


def test_qr_rejects_wide_and_nonfinite():
    with pytest.raises(ValueError):
        linalg.qr_reduced(np.ones((2, 3)))
    with pytest.raises(ValueError):
        linalg.qr_reduced(np.array([[1.0], [np.nan]]))


# --- svd ------------------------------------------------------------------

def test_svd_diagonal():
    np.testing.assert_allclose(linalg.svd(np.diag([3.0, 2.0, 1.0])).s, [3, 2, 1])
    np.testing.assert_allclose(linalg.svd(np.eye(2)).s, [1, 1])


def test_svd_matches_jacobi_oracle(rng):
    A = rng.standard_normal((20, 10))
    oracle = jacobi_singular_values(A)
    assert np.max(np.abs(linalg.svd(A).s - oracle)) <= 1e-8


def _check_svd_invariants(A):
    f = linalg.svd(A)
    k = min(A.shape)
    assert f.u.shape == (A.shape[0], k) and f.v.shape == (A.shape[1], k)
    assert np.max(np.abs(f.u.T @ f.u - np.eye(k))) <= 1e-10
    assert np.max(np.abs(f.v.T @ f.v - np.eye(k))) <= 1e-10
    assert np.all(np.diff(f.s) <= 0) and np.all(f.s >= 0)
    assert np.linalg.norm(f.reconstruct() - A) <= 1e-8 * max(1.0, np.linalg.norm(A))


def test_svd_invariants_on_random_shapes(rng):
    for _ in range(100):
        n, p = rng.integers(1, 60, size=2)
        _check_svd_invariants(rng.standard_normal((n, p)) * 10.0 ** rng.uniform(-3, 3))


def test_svd_convergence_error_message():
    err = linalg.SvdConvergenceError((3, 2), ["gesdd", "gesvd"])
    assert "3x2" in str(err) and "gesvd" in str(err)
    assert isinstance(err, linalg.LinAlgFailure)


# --- least squares ----------------------------------------------------------

@pytest.mark.parametrize(
    "A, b, expected",
    [
        (np.eye(2), [3.0, 4.0], [3.0, 4.0]),
        (np.array([[1.0], [1.0]]), [0.0, 2.0], [1.0]),
        (np.array([[1.0, 0], [0, 1], [0, 0]]), [1.0, 2.0, 3.0], [1.0, 2.0]),
    ],
)
def test_lstsq_examples(A, b, expected):
    np.testing.assert_allclose(linalg.lstsq_minnorm(A, b), expected, atol=1e-14)


def test_lstsq_minimum_norm_on_rank_deficient(rng):
    B = rng.standard_normal((10, 3))
    A = np.hstack([B, B[:, :1]])  # column 4 duplicates column 1
    b = rng.standard_normal(10)
    x = linalg.lstsq_minnorm(A, b)
    # the minimum-norm solution has no component in the null space (1,0,0,-1)
    assert abs(x[0] - x[3]) <= 1e-10
    np.testing.assert_allclose(A.T @ (A @ x - b), 0, atol=1e-10)


def test_lstsq_overflow_is_reported():
    with pytest.raises(linalg.LinAlgFailure):
        linalg.lstsq_minnorm(np.array([[2e-313, 0.0], [0.0, 0.0]]), [1.0, 1.0])


def test_lstsq_optimality_spot_check(rng):
    A = rng.standard_normal((15, 6))
    b = rng.standard_normal(15)
    best = np.linalg.norm(A @ linalg.lstsq_minnorm(A, b) - b)
    trials = rng.standard_normal((200, 6))
    assert np.all(np.linalg.norm(trials @ A.T - b, axis=1) >= best)


# --- tikhonov -----------------------------------------------------------------

def test_tikhonov_examples():
    np.testing.assert_allclose(linalg.tikhonov_solve([[1.0]], [1.0], 1.0), [0.5])
    np.testing.assert_allclose(linalg.tikhonov_solve(np.eye(2), [2.0, 4.0], 1.0), [1.0, 2.0])
    np.testing.assert_allclose(linalg.tikhonov_solve([[1.0]], [1.0], 0.0), [1.0])


def test_tikhonov_zero_alpha_matches_lstsq(rng):
    A = rng.standard_normal((12, 5))
    b = rng.standard_normal(12)
    np.testing.assert_allclose(linalg.tikhonov_solve(A, b, 0.0), linalg.lstsq_minnorm(A, b), atol=1e-8)


def test_tikhonov_singular_without_regularization_fails():
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(linalg.LinAlgFailure):
        linalg.tikhonov_solve(A, [1.0, 1.0], 0.0)
    assert np.all(np.isfinite(linalg.tikhonov_solve(A, [1.0, 1.0], 1e-3)))


def test_tikhonov_rejects_negative_alpha():
    with pytest.raises(ValueError):
        linalg.tikhonov_solve(np.eye(2), [1.0, 1.0], -1.0)


def test_tikhonov_shrinks(rng):
    A = rng.standard_normal((20, 8))
    b = rng.standard_normal(20)
    norms = [np.linalg.norm(linalg.tikhonov_solve(A, b, a)) for a in np.logspace(-8, 3, 12)]
    assert all(x >= y for x, y in zip(norms, norms[1:]))


# --- truncated SVD ----------------------------------------------------------------

def test_tsvd_examples():
    np.testing.assert_allclose(linalg.tsvd_solve(np.diag([2.0, 1e-8]), [2.0, 1e-8], 1), [1.0, 0.0])
    np.testing.assert_allclose(linalg.tsvd_solve(np.diag([3.0, 2.0, 1.0]), [3.0, 2.0, 1.0], 2), [1, 1, 0])


def test_tsvd_full_rank_matches_lstsq(rng):
    A = rng.standard_normal((10, 4))
    b = rng.standard_normal(10)
    np.testing.assert_allclose(linalg.tsvd_solve(A, b, 4), linalg.lstsq_minnorm(A, b), atol=1e-10)


def test_tsvd_exact_rank_matches_lstsq(rng):
    A = rng.standard_normal((12, 3)) @ rng.standard_normal((3, 7))
    b = rng.standard_normal(12)
    r = linalg.numerical_rank(A, 1e-8)
    assert r == 3
    np.testing.assert_allclose(linalg.tsvd_solve(A, b, r), linalg.lstsq_minnorm(A, b), atol=1e-9)


def test_tsvd_rank_beyond_numerical_rank_fails():
    with pytest.raises(linalg.LinAlgFailure):
        linalg.tsvd_solve(np.diag([1.0, 1e-16]), [1.0, 1.0], 2)
    with pytest.raises(ValueError):
        linalg.tsvd_solve(np.eye(2), [1.0, 1.0], 3)


# --- cond and numerical rank -------------------------------------------------------

def test_cond_examples():
    assert linalg.cond(np.eye(5)) == pytest.approx(1.0)
    assert linalg.cond(np.diag([10.0, 1.0])) == pytest.approx(10.0)
    assert linalg.cond(np.diag(np.arange(1, 101, dtype=float) ** -2.0)) == pytest.approx(1e4, rel=1e-10)
    assert linalg.cond(np.array([[1.0, 0.0], [0.0, 0.0]])) == np.inf


def test_cond_power_law_matrix(rng):
    A, s = power_law_matrix(rng, 50, 40, 1.5)
    assert linalg.cond(A) == pytest.approx(s[0] / s[-1], rel=1e-8)


def test_numerical_rank_examples():
    assert linalg.numerical_rank(np.diag([1.0, 1e-3, 1e-9]), 1e-6) == 2
    assert linalg.numerical_rank(np.eye(3), 0.5) == 3
    assert linalg.numerical_rank(np.diag([1.0, 1e-9]), 1e-3) == 1
    with pytest.raises(ValueError):
        linalg.numerical_rank(np.eye(2), 1.5)


# --- property-based ----------------------------------------------------------------

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False, allow_subnormal=False)


@st.composite
def tall_matrices(draw):
    n = draw(st.integers(1, 12))
    p = draw(st.integers(1, n))
    return draw(arrays(np.float64, (n, p), elements=finite))


@settings(max_examples=60, deadline=None)
@given(tall_matrices())
def test_property_svd_invariants(A):
    _check_svd_invariants(A)


@settings(max_examples=60, deadline=None)
@given(tall_matrices(), st.floats(1e-6, 1e3))
def test_property_tikhonov_not_larger_than_minnorm(A, alpha):
    b = np.ones(A.shape[0])
    x = linalg.tikhonov_solve(A, b, alpha)
    # normal-equation solve: forward error grows with cond(A^T A + alpha I)
    s = np.linalg.svd(A, compute_uv=False)
    cond = (s[0] ** 2 + alpha) / (s[-1] ** 2 + alpha)
    assert np.linalg.norm(x) <= np.linalg.norm(linalg.lstsq_minnorm(A, b)) * (1 + 1e-8 + 1e-14 * cond) + 1e-12


@settings(max_examples=60, deadline=None)
@given(tall_matrices())
def test_property_qr_reconstruction(A):
    q, r, _ = linalg.qr_reduced(A)
    assert np.linalg.norm(q @ r - A) <= 1e-10 * max(np.linalg.norm(A), 1e-300) + 1e-300
    assert np.all(np.diag(r) >= 0)
