"""Small dense linear-algebra kernels used throughout the package.

Matrices are plain 2-D ``float64`` numpy arrays. The factorizations are thin
wrappers over LAPACK (through numpy/scipy) that add the bookkeeping the rest
of the code relies on: finiteness checks, rank reports and deterministic
sign conventions.
"""

from typing import NamedTuple

import numpy as np
from scipy import linalg as la

RANK_TOL = 1e-12


class LinAlgFailure(RuntimeError):
    """Raised when a factorization does not converge."""


class SvdResult(NamedTuple):
    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray


class QrResult(NamedTuple):
    Q: np.ndarray
    R: np.ndarray
    deficient: tuple   # indices i with |R_ii| < RANK_TOL * max|R_jj|


class LstsqResult(NamedTuple):
    x: np.ndarray
    rank_deficient: bool
    rank: int


def as_matrix(m, name="matrix"):
    """Return `m` as a finite 2-D float64 array (copying only if needed)."""
    a = np.asarray(m, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if a.size == 0:
        raise ValueError(f"{name} is empty (shape {a.shape})")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def normalize_signs(U, V=None):
    """Flip columns so that each column's largest-magnitude entry is positive.

    If `V` is given its columns are flipped in lockstep, which keeps
    ``U @ diag(s) @ V.T`` unchanged.
    """
    U = np.array(U, dtype=float, copy=True)
    if U.shape[1] == 0:
        return U if V is None else (U, np.array(V, copy=True))
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    U *= signs
    if V is None:
        return U
    V = np.array(V, dtype=float, copy=True) * signs
    return U, V


def thin_svd(m):
    """Thin SVD ``m = U diag(s) V^T`` with min(rows, cols) triplets.

    Singular vectors are sign-normalized (largest entry of each left vector
    positive) so results are reproducible across runs.
    """
    a = as_matrix(m)
    try:
        U, s, Vt = la.svd(a, full_matrices=False, lapack_driver="gesdd",
                          check_finite=False)
    except (la.LinAlgError, ValueError):
        try:
            U, s, Vt = la.svd(a, full_matrices=False, lapack_driver="gesvd",
                              check_finite=False)
        except la.LinAlgError as exc:
            raise LinAlgFailure(
                f"SVD did not converge for a {a.shape[0]}x{a.shape[1]} matrix"
            ) from exc
    U, V = normalize_signs(U, Vt.T)
    return SvdResult(U, s, V)


def thin_qr(m):
    """Thin Householder QR of a tall matrix.

    Rank deficiency does not raise; the indices of negligible diagonal
    entries of R are returned in ``deficient``.
    """
    a = as_matrix(m)
    if a.shape[0] < a.shape[1]:
        raise ValueError(f"thin_qr needs rows >= cols, got {a.shape}")
    Q, R = la.qr(a, mode="economic", check_finite=False)
    return QrResult(Q, R, _deficient_diagonal(R))


def _deficient_diagonal(R):
    d = np.abs(np.diag(R))
    scale = d.max() if d.size else 0.0
    if scale == 0.0:
        return tuple(range(d.size))
    return tuple(int(i) for i in np.flatnonzero(d < RANK_TOL * scale))


def pseudo_inverse(m, rel_tol=RANK_TOL):
    """Moore-Penrose inverse, dropping singular values below rel_tol * s_max."""
    if not 0.0 < rel_tol < 1.0:
        raise ValueError("rel_tol must lie in (0, 1)")
    U, s, V = thin_svd(m)
    keep = s > rel_tol * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    return (V[:, keep] / s[keep]) @ U[:, keep].T


def least_squares(a, b):
    """Solve ``min ||a x - b||_2`` through a QR of ``a``.

    `b` may be a vector or a matrix of right-hand sides. Rank-deficient
    systems fall back to the minimum-norm solution via the pseudo-inverse
    and are flagged in the result.
    """
    a = as_matrix(a, "a")
    b = np.asarray(b, dtype=float)
    if a.shape[0] < a.shape[1]:
        raise ValueError(f"least_squares needs rows >= cols, got {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"rhs has {b.shape[0]} rows, matrix has {a.shape[0]}")
    Q, R, deficient = thin_qr(a)
    if deficient:
        x = pseudo_inverse(a) @ b
        s = thin_svd(a).singular_values
        rank = int(np.sum(s > RANK_TOL * s[0])) if s[0] > 0 else 0
        return LstsqResult(x, True, rank)
    x = la.solve_triangular(R, Q.T @ b, check_finite=False)
    return LstsqResult(x, False, a.shape[1])


def qr_step(a, b):
    """Least-squares solve that never forms Q.

    Factorizes the augmented matrix ``[a | b]`` and reads ``Q^T b`` from the
    last column of R. Returns ``(x, R)`` where R is the n x n triangular
    factor of `a`. Used for large Gauss-Newton steps where holding Q would
    double the memory footprint.
    """
    a = np.asarray(a, dtype=float)
    aug = np.empty((a.shape[0], a.shape[1] + 1), order="F")
    aug[:, :-1] = a
    aug[:, -1] = b
    return solve_augmented(aug)


def solve_augmented(aug):
    """In-place variant of :func:`qr_step` on a Fortran-ordered ``[a | b]``.

    The contents of `aug` are destroyed.
    """
    n = aug.shape[1] - 1
    if aug.shape[0] < n:
        raise ValueError(f"least-squares system is underdetermined: {aug.shape}")
    (R,) = la.qr(aug, mode="r", overwrite_a=True, check_finite=False)
    Rn = np.triu(R[:n, :n])
    deficient = _deficient_diagonal(Rn)
    if deficient:
        return None, Rn
    x = la.solve_triangular(Rn, R[:n, n], check_finite=False)
    return x, Rn


def rank_report(R):
    """Indices of negligible diagonal entries of a triangular factor."""
    return _deficient_diagonal(R)
