"""Offline construction of windowed space-time trial subspaces.

Snapshots of each sub-window are shifted by the state just before the
sub-window, compressed in space by POD, and compressed in time by a
"tailored" SVD: every spatial mode gets its own temporal basis. Space-time
basis vectors are Kronecker products ``psi_j^i (x) phi_i`` (time-major
vectorization), and sub-window bases are stacked into a block lower
triangular window basis.
"""

import warnings

import numpy as np
from scipy import linalg as la

from . import densekit


def _full(t):
    return t.full if hasattr(t, "full") else np.asarray(t, dtype=float)


def energy_rank(singular_values, energy):
    """Smallest n whose leading squared singular values hold `energy` of the total.

    ``energy >= 1`` keeps every value above ``1e-12 * s[0]``. At least one
    vector is always kept.
    """
    if not 0.0 < energy:
        raise ValueError("energy fraction must be positive")
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0 or s[0] <= 0.0:
        return 1
    if energy >= 1.0:
        return max(1, int(np.sum(s > densekit.RANK_TOL * s[0])))
    frac = np.cumsum(s**2) / np.sum(s**2)
    return max(1, int(np.searchsorted(frac, energy) + 1))


def build_snapshot_tensor(trajectories, plan, k, m):
    """Shifted snapshots of sub-window (k, m): shape (n_space, n_steps, n_train).

    Entry ``[a, b, c]`` is ``u^{z+b}_a - u^{z-1}_a`` of training trajectory c,
    with ``z = plan.zeta(k, m)``.
    """
    z = plan.zeta(k, m)
    n = plan.sub_steps(k, m)
    blocks = []
    for c, t in enumerate(trajectories):
        full = _full(t)
        if full.shape[1] < z + n:
            raise ValueError(f"training trajectory {c} has {full.shape[1] - 1} steps, "
                             f"sub-window ({k}, {m}) needs {z + n - 1}")
        blocks.append(full[:, z:z + n] - full[:, z - 1:z])
    return np.stack(blocks, axis=2)


def pod_spatial(X, e_s):
    """Leading left singular vectors of the mode-1 unfolding of `X`."""
    if not 0.0 < e_s <= 1.0:
        raise ValueError("e_s must lie in (0, 1]")
    unfolded = X.reshape(X.shape[0], -1)
    if not np.any(unfolded):
        raise ValueError("snapshot tensor is identically zero; no basis can be derived")
    U, s, _ = densekit.thin_svd(unfolded)
    return U[:, :energy_rank(s, e_s)]


def tailored_temporal(X, Phi, e_t):
    """One orthonormal temporal basis per spatial mode.

    For mode i the ``(n_steps, n_train)`` matrix with columns
    ``X[:, :, c].T @ phi_i`` is compressed by SVD with energy `e_t`.
    Returns ``(psis, flagged)`` where `flagged` lists modes whose projection
    vanished and were given a single canonical vector instead.
    """
    if not 0.0 < e_t <= 1.0:
        raise ValueError("e_t must lie in (0, 1]")
    psis, flagged = [], []
    for i in range(Phi.shape[1]):
        M = np.einsum("abc,a->bc", X, Phi[:, i])
        if not np.any(M):
            psi = np.zeros((X.shape[1], 1))
            psi[0, 0] = 1.0
            psis.append(psi)
            flagged.append(i)
            continue
        U, s, _ = densekit.thin_svd(M)
        psis.append(U[:, :energy_rank(s, e_t)])
    if flagged:
        warnings.warn(f"spatial modes {flagged} have no temporal content", RuntimeWarning)
    return psis, flagged


class SubwindowBasis:
    """Tensor-product basis of one sub-window.

    Column ``(i, j)`` is ``kron(psi^i[:, j], Phi[:, i])``; columns are
    ordered with the spatial index outermost. The assembled matrix is only
    formed on request; everything else works from the factors.
    """

    def __init__(self, spatial, temporal):
        self.spatial = np.asarray(spatial, dtype=float)
        self.temporal = [np.asarray(p, dtype=float) for p in temporal]
        if len(self.temporal) != self.spatial.shape[1]:
            raise ValueError("need one temporal basis per spatial vector")
        n_steps = {p.shape[0] for p in self.temporal}
        if len(n_steps) != 1:
            raise ValueError("temporal bases must share their number of rows")
        self.n_steps = n_steps.pop()
        counts = [p.shape[1] for p in self.temporal]
        self.spatial_index = np.repeat(np.arange(len(counts)), counts)
        self.temporal_matrix = np.hstack(self.temporal)       # (n_steps, n_st)
        self.expanded = self.spatial[:, self.spatial_index]  # (n_space, n_st)

    @classmethod
    def identity(cls, n_space, n_steps):
        return cls(np.eye(n_space), [np.eye(n_steps)] * n_space)

    @property
    def n_space(self):
        return self.spatial.shape[0]

    @property
    def n_st(self):
        return self.temporal_matrix.shape[1]

    @property
    def temporal_counts(self):
        return [p.shape[1] for p in self.temporal]

    def row_block(self, c):
        """Rows of the assembled basis belonging to local step c."""
        return self.expanded * self.temporal_matrix[c]

    def matrix(self):
        return np.vstack([self.row_block(c) for c in range(self.n_steps)])

    def reconstruct(self, y):
        """Space-time field ``sum_q y_q pi_q`` as an (n_space, n_steps) array."""
        return self.expanded @ (self.temporal_matrix * y).T

    def project(self, X):
        """Coordinates ``Pi^T vec(X)`` of an (n_space, n_steps) field."""
        return np.einsum("qc,cq->q", self.expanded.T @ X, self.temporal_matrix)


def assemble_subwindow_basis(Phi, psis):
    return SubwindowBasis(Phi, psis)


class WindowBasis:
    """Block lower triangular basis of a window.

    Sub-window m' is represented by its own basis plus, for every earlier
    sub-window m, the basis rows of m's last step (the "trailing block"),
    which carries m's end state forward as an offset.
    """

    def __init__(self, sub_bases):
        self.sub_bases = list(sub_bases)
        if not self.sub_bases:
            raise ValueError("a window basis needs at least one sub-window basis")
        if len({b.n_space for b in self.sub_bases}) != 1:
            raise ValueError("sub-window bases disagree on n_space")
        self.col_offsets = np.concatenate(
            [[0], np.cumsum([b.n_st for b in self.sub_bases])]).astype(int)
        self.step_offsets = np.concatenate(
            [[0], np.cumsum([b.n_steps for b in self.sub_bases])]).astype(int)
        self.trailing_blocks = [b.row_block(b.n_steps - 1) for b in self.sub_bases]
        self._trailing = np.hstack(self.trailing_blocks)

    @property
    def n_space(self):
        return self.sub_bases[0].n_space

    @property
    def n_st(self):
        return int(self.col_offsets[-1])

    @property
    def n_steps(self):
        return int(self.step_offsets[-1])

    @property
    def n_sub(self):
        return len(self.sub_bases)

    def locate(self, c):
        """(sub-window, local step inside it) of window step c."""
        m = int(np.searchsorted(self.step_offsets, c, side="right") - 1)
        if not 0 <= m < self.n_sub:
            raise IndexError(f"step {c} outside the window")
        return m, c - int(self.step_offsets[m])

    def coords(self, y, m):
        return y[self.col_offsets[m]:self.col_offsets[m + 1]]

    def row_block(self, c):
        m, local = self.locate(c)
        lo, hi = self.col_offsets[m], self.col_offsets[m + 1]
        P = np.zeros((self.n_space, self.n_st))
        P[:, :lo] = self._trailing[:, :lo]
        P[:, lo:hi] = self.sub_bases[m].row_block(local)
        return P

    def matrix(self):
        return np.vstack([self.row_block(c) for c in range(self.n_steps)])

    def block_diagonal(self):
        return la.block_diag(*[b.matrix() for b in self.sub_bases])

    def reconstruct(self, reference, y):
        """``reference + Pi y`` as an (n_space, n_steps) block.

        `reference` is the incoming state, held constant over the window.
        """
        y = np.asarray(y, dtype=float)
        V = np.empty((self.n_space, self.n_steps))
        offset = np.asarray(reference, dtype=float).copy()
        for m, b in enumerate(self.sub_bases):
            s0, s1 = self.step_offsets[m], self.step_offsets[m + 1]
            ym = self.coords(y, m)
            V[:, s0:s1] = offset[:, None] + b.reconstruct(ym)
            offset = offset + self.trailing_blocks[m] @ ym
        return V

    def project_blocks(self, block, incoming_states):
        """Block-diagonal projection of a window block.

        ``incoming_states[m]`` is the reference of sub-window m; the result
        is ``blockdiag(Pi^m)^+ (block - references)``.
        """
        return np.concatenate([
            b.project(block[:, self.step_offsets[m]:self.step_offsets[m + 1]]
                      - np.asarray(incoming_states[m])[:, None])
            for m, b in enumerate(self.sub_bases)])


def assemble_window_basis(sub_bases):
    return WindowBasis(sub_bases)


def train_window_bases(trajectories, plan, e_s, e_t):
    """Tailored space-time bases for every window of `plan`."""
    bases = []
    for k in range(plan.n_windows):
        subs = []
        for m in range(plan.n_sub(k)):
            X = build_snapshot_tensor(trajectories, plan, k, m)
            Phi = pod_spatial(X, e_s)
            psis, _ = tailored_temporal(X, Phi, e_t)
            subs.append(SubwindowBasis(Phi, psis))
        bases.append(WindowBasis(subs))
    return bases


def identity_window_bases(plan, n_space):
    """Bases that span every state of every window (one sub-window each)."""
    return [WindowBasis([SubwindowBasis.identity(n_space, plan.window_steps(k))])
            for k in range(plan.n_windows)]


def _features(p):
    mu = p.as_array() if hasattr(p, "as_array") else np.asarray(p, dtype=float)
    return np.concatenate([[1.0], mu])


class InitialGuessModel:
    """Affine regression ``y^k(mu) = [1, mu1, mu2] @ coefficients[k]``.

    With fewer than three training points the model falls back to the
    nearest training parameter and sets ``nearest_neighbor``.
    """

    def __init__(self, coefficients, features, targets, nearest_neighbor):
        self.coefficients = coefficients
        self.features = features
        self.targets = targets
        self.nearest_neighbor = nearest_neighbor

    def predict(self, k, p):
        x = _features(p)
        if self.nearest_neighbor:
            c = int(np.argmin(np.linalg.norm(self.features[:, 1:] - x[1:], axis=1)))
            return self.targets[k][c].copy()
        return x @ self.coefficients[k]


def window_targets(basis, full, plan, k):
    """Training coordinates of window k for one full trajectory array."""
    start = plan.phi(k)
    block = full[:, start:start + plan.window_steps(k)]
    refs = [full[:, plan.zeta(k, m) - 1] for m in range(plan.n_sub(k))]
    return basis.project_blocks(block, refs)


def fit_initial_guess(bases, trajectories, params, plan):
    features = np.array([_features(p) for p in params])
    fulls = [_full(t) for t in trajectories]
    targets = [np.array([window_targets(bases[k], f, plan, k) for f in fulls])
               for k in range(plan.n_windows)]
    if len(params) < 3:
        return InitialGuessModel(None, features, targets, True)
    coefficients = [densekit.least_squares(features, Y).x for Y in targets]
    return InitialGuessModel(coefficients, features, targets, False)
