import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wstlspg import densekit


def finite_matrices(max_rows=8, max_cols=8, tall=False):
    def build(shape):
        r, c = shape
        if tall and r < c:
            r, c = c, r
        return arrays(np.float64, (r, c), elements=st.floats(-10, 10, allow_nan=False))
    return st.tuples(st.integers(1, max_rows), st.integers(1, max_cols)).flatmap(build)


def test_svd_identity_and_diagonal():
    U, s, V = densekit.thin_svd(np.eye(2))
    assert np.allclose(s, [1, 1])
    assert np.allclose(U.T @ U, np.eye(2)) and np.allclose(V.T @ V, np.eye(2))
    assert np.allclose(densekit.thin_svd([[2.0, 0.0], [0.0, 0.0]]).singular_values, [2, 0])


def test_svd_reconstructs_random(rng):
    M = rng.standard_normal((5, 3))
    U, s, V = densekit.thin_svd(M)
    assert U.shape == (5, 3) and V.shape == (3, 3)
    assert np.linalg.norm(U * s @ V.T - M) / np.linalg.norm(M) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(finite_matrices())
def test_svd_properties(M):
    U, s, V = densekit.thin_svd(M)
    k = min(M.shape)
    assert len(s) == k
    assert np.all(s >= 0) and np.all(np.diff(s) <= 1e-12 * max(s[0], 1))
    assert np.linalg.norm(U.T @ U - np.eye(k)) <= 1e-12 * k + 1e-12
    assert np.linalg.norm(V.T @ V - np.eye(k)) <= 1e-12 * k + 1e-12
    assert np.linalg.norm(U * s @ V.T - M) <= 1e-10 * max(np.linalg.norm(M), 1e-300)


def test_svd_signs_are_normalized(rng):
    U, _, _ = densekit.thin_svd(rng.standard_normal((6, 4)))
    idx = np.argmax(np.abs(U), axis=0)
    assert np.all(U[idx, np.arange(4)] > 0)


def test_svd_rejects_nonfinite():
    with pytest.raises(ValueError):
        densekit.thin_svd([[1.0, np.nan]])


def test_qr_examples(rng):
    Q, R, deficient = densekit.thin_qr(np.eye(3))
    assert np.allclose(np.abs(Q), np.eye(3)) and np.allclose(np.abs(R), np.eye(3))
    assert deficient == ()
    Q, R, _ = densekit.thin_qr([[3.0], [4.0]])
    assert np.isclose(abs(R[0, 0]), 5.0)
    assert np.allclose(np.abs(Q[:, 0]), [0.6, 0.8])
    M = rng.standard_normal((6, 2))
    Q, R, _ = densekit.thin_qr(M)
    assert np.linalg.norm(Q @ R - M) <= 1e-10 * np.linalg.norm(M)
    assert np.allclose(R, np.triu(R))


def test_qr_flags_rank_deficiency():
    M = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    assert densekit.thin_qr(M).deficient == (1,)
    with pytest.raises(ValueError):
        densekit.thin_qr(np.ones((2, 3)))


@settings(max_examples=60, deadline=None)
@given(finite_matrices(tall=True))
def test_qr_properties(M):
    Q, R, _ = densekit.thin_qr(M)
    n = M.shape[1]
    assert np.linalg.norm(Q.T @ Q - np.eye(n)) <= 1e-12 * n + 1e-12
    assert np.linalg.norm(Q @ R - M) <= 1e-10 * max(np.linalg.norm(M), 1e-300)


def test_least_squares_examples(rng):
    assert np.allclose(densekit.least_squares(np.eye(2), [1, 2]).x, [1, 2])
    assert np.allclose(densekit.least_squares([[1.0], [1.0]], [0, 2]).x, [1])
    a, b = rng.standard_normal((8, 3)), rng.standard_normal(8)
    ref = np.linalg.pinv(a) @ b
    res = densekit.least_squares(a, b)
    assert not res.rank_deficient and res.rank == 3
    assert np.allclose(res.x, ref, atol=1e-9)
    assert np.linalg.norm(a.T @ (a @ res.x - b)) <= 1e-9 * np.linalg.norm(a.T @ b)


def test_least_squares_rank_deficient_returns_min_norm():
    a = np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]])
    res = densekit.least_squares(a, [2.0, 2.0, 0.0])
    assert res.rank_deficient and res.rank == 1
    assert np.allclose(res.x, [1.0, 1.0])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 20), st.integers(0, 30), st.integers(0, 2**32 - 1))
def test_least_squares_agrees_with_pinv(n, extra, seed):
    r = np.random.default_rng(seed)
    a = r.standard_normal((n + extra, n))
    b = r.standard_normal(n + extra)
    x = densekit.least_squares(a, b).x
    assert np.allclose(x, densekit.pseudo_inverse(a) @ b, atol=1e-9 * max(1, np.abs(x).max()))


def test_pseudo_inverse_examples(rng):
    assert np.allclose(densekit.pseudo_inverse(np.eye(3)), np.eye(3))
    assert np.allclose(densekit.pseudo_inverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))
    Q = np.linalg.qr(rng.standard_normal((7, 3)))[0]
    assert np.linalg.norm(densekit.pseudo_inverse(Q) - Q.T) <= 1e-12
    with pytest.raises(ValueError):
        densekit.pseudo_inverse(np.eye(2), rel_tol=0.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 6), st.integers(0, 2**32 - 1))
def test_pseudo_inverse_involution_and_penrose(n, extra, seed):
    r = np.random.default_rng(seed)
    m = r.standard_normal((n + extra, n))
    p = densekit.pseudo_inverse(m)
    assert np.linalg.norm(m @ p @ m - m) <= 1e-9 * np.linalg.norm(m)
    assert np.linalg.norm(densekit.pseudo_inverse(p) - m) <= 1e-8 * np.linalg.norm(m)


def test_solve_augmented_matches_least_squares(rng):
    a, b = rng.standard_normal((9, 4)), rng.standard_normal(9)
    x, R = densekit.qr_step(a, b)
    assert np.allclose(x, densekit.least_squares(a, b).x, atol=1e-12)
    assert np.allclose(np.abs(np.diag(R)), np.abs(np.diag(np.linalg.qr(a)[1])))
    x, _ = densekit.qr_step(np.column_stack([a[:, 0], a[:, 0]]), b)
    assert x is None
