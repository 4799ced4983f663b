"""GNAT hyper-reduction for windowed space-time LSPG.

Offline: residual snapshots from training solves, a tailored space-time
residual basis per window, a greedy space-time sample mesh, and the gappy
weighting ``W = (Z Pi_r)^+ Z``. Online: the window residual and Jacobian are
evaluated only at the sampled entries, which requires the state on the
spatial stencil of the sampled cells at the sampled steps and their
predecessors; those rows of the trial basis are extracted once per window.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg as la

from . import densekit
from .solver import GaussNewtonConfig, solve_wst_lspg
from .subspaces import SubwindowBasis, pod_spatial, tailored_temporal
from .windows import BDF1, temporal_coefficients

FULL_RANK_TOL = 1e-10


class ResidualSnapshots:
    """Residual vectors of every Gauss-Newton iterate, grouped by window.

    ``matrices[k]`` has one column per iterate (all training parameters
    concatenated) and ``iterations[k][q]`` is the iteration count of
    training parameter q in window k.
    """

    def __init__(self, matrices, iterations):
        self.matrices = matrices
        self.iterations = iterations

    def n_res(self, k):
        return self.matrices[k].shape[1]


def collect_residual_snapshots(models, bases, plan, u0, scheme=BDF1, guess=None,
                               params=None, cfg=GaussNewtonConfig()):
    """Run unweighted solves for every training model and keep all residuals."""
    per_window = [[] for _ in range(plan.n_windows)]
    iterations = [[] for _ in range(plan.n_windows)]
    for q, model in enumerate(models):
        p = params[q] if params is not None else None
        try:
            sol = solve_wst_lspg(model, bases, plan, u0, scheme, guess, p, cfg,
                                 collect_residuals=True)
        except Exception as exc:
            raise RuntimeError(f"residual collection failed for training point {q} "
                               f"({p}): {exc}") from exc
        for k, rep in enumerate(sol.reports):
            per_window[k].append(rep.residual_snapshots)
            iterations[k].append(rep.iterations)
    return ResidualSnapshots([np.hstack(m) for m in per_window], iterations)


class ResidualBasis:
    """Orthonormal block-diagonal space-time residual basis of one window."""

    def __init__(self, sub_bases, matrix, n_space):
        self.sub_bases = sub_bases
        self.matrix = matrix
        self.n_space = n_space
        self.step_offsets = np.concatenate(
            [[0], np.cumsum([b.n_steps for b in sub_bases])]).astype(int)

    @property
    def n_steps(self):
        return int(self.step_offsets[-1])

    @property
    def n_r(self):
        return self.matrix.shape[1]

    def temporal_factors(self):
        """All temporal factors zero-padded to the window length, side by side."""
        cols = []
        for m, b in enumerate(self.sub_bases):
            padded = np.zeros((self.n_steps, b.n_st))
            padded[self.step_offsets[m]:self.step_offsets[m + 1]] = b.temporal_matrix
            cols.append(padded)
        return np.hstack(cols)


def build_residual_basis(snapshots, n_space, sub_steps, e_rs, e_rt):
    """Tailored residual basis (no shift) orthonormalized by QR per sub-window.

    `snapshots` is the ``(n_space * n_steps, n_res)`` matrix of one window and
    `sub_steps` the residual sub-window lengths.
    """
    S = np.asarray(snapshots, dtype=float)
    if not np.any(S):
        raise ValueError("residual snapshots are identically zero; hyper-reduction is unnecessary")
    n_steps = S.shape[0] // n_space
    if n_steps * n_space != S.shape[0] or sum(sub_steps) != n_steps:
        raise ValueError("residual sub-windows do not tile the window")
    X = S.reshape(n_steps, n_space, -1).transpose(1, 0, 2)
    subs, blocks = [], []
    start = 0
    for n in sub_steps:
        Xm = X[:, start:start + n]
        start += n
        Phi = pod_spatial(Xm, e_rs)
        psis, _ = tailored_temporal(Xm, Phi, e_rt)
        b = SubwindowBasis(Phi, psis)
        Q, _, deficient = densekit.thin_qr(b.matrix())
        if deficient:
            raise densekit.LinAlgFailure("residual sub-window basis is rank deficient")
        subs.append(b)
        blocks.append(densekit.normalize_signs(Q))
    return ResidualBasis(subs, la.block_diag(*blocks), n_space)


def _greedy(Y, node_errors, n_nodes, n_pick):
    """Cycling gappy greedy over the columns of `Y`.

    Pick p targets column ``j = p mod ncols``. In the first sweep column j is
    fitted by columns ``0..j-1`` on the rows selected so far; in later sweeps
    by all other columns. The node with the largest squared misfit wins
    (smallest index on ties). `node_errors(err2, chosen)` maps squared
    pointwise misfits to per-node totals and the rows owned by `chosen`.
    """
    ncols = Y.shape[1]
    chosen = []
    for pick in range(n_pick):
        j = pick % ncols
        others = list(range(j)) if pick < ncols else [c for c in range(ncols) if c != j]
        target = Y[:, j]
        rows = node_errors(None, chosen)
        if others and len(rows):
            coef = np.linalg.lstsq(Y[np.ix_(rows, others)], target[rows], rcond=None)[0]
            err = target - Y[:, others] @ coef
        else:
            err = target
        totals = node_errors(err * err, None)
        totals[chosen] = -np.inf
        chosen.append(int(np.argmax(totals)))
    return chosen


@dataclass(frozen=True)
class SampleMesh:
    times: np.ndarray   # local step indices
    cells: np.ndarray   # spatial cell indices
    n_space: int

    @property
    def size(self):
        return len(self.times) * len(self.cells)

    @property
    def indices(self):
        """Sorted rows of the window residual vector covered by the mesh."""
        return (self.times[:, None] * self.n_space + self.cells[None, :]).ravel()


def greedy_sample_mesh(rb, z_t, z_s):
    """Temporal indices first (on the temporal factors), then spatial cells."""
    n_steps, n_space = rb.n_steps, rb.n_space
    if not (1 <= z_t <= n_steps and 1 <= z_s <= n_space):
        raise ValueError(f"need 1 <= z_t <= {n_steps} and 1 <= z_s <= {n_space}")
    if z_t * z_s < rb.n_r:
        raise ValueError(f"sample mesh of {z_t}x{z_s} entries cannot determine "
                         f"{rb.n_r} residual coordinates")
    Psi = rb.temporal_factors()

    def time_nodes(err2, chosen):
        return np.array(chosen, dtype=int) if err2 is None else err2.copy()

    times = np.sort(_greedy(Psi, time_nodes, n_steps, z_t))

    def space_nodes(err2, chosen):
        if err2 is None:
            return (times[:, None] * n_space + np.array(chosen, dtype=int)[None, :]).ravel()
        return err2.reshape(n_steps, n_space)[times].sum(axis=0)

    cells = np.sort(_greedy(rb.matrix, space_nodes, n_space, z_s))
    return SampleMesh(times, cells, n_space)


def gappy_error(rb, mesh, data):
    """Frobenius error of reconstructing `data` columns from sampled rows."""
    rows = mesh.indices
    coef = np.linalg.lstsq(rb.matrix[rows], data[rows], rcond=None)[0]
    return float(np.linalg.norm(data - rb.matrix @ coef))


class GnatWeights:
    """Gappy weighting of one window: ``W v = (Z Pi_r)^+ v[indices]``."""

    def __init__(self, mesh, rb):
        self.mesh = mesh
        self.indices = mesh.indices
        sampled = rb.matrix[self.indices]
        s = densekit.thin_svd(sampled).singular_values
        if len(self.indices) < rb.n_r or s[-1] <= FULL_RANK_TOL:
            raise densekit.LinAlgFailure(
                f"sampled residual basis is rank deficient (sigma_min={s[-1]:.2e}); "
                "increase z_t or z_s")
        self.operator = densekit.pseudo_inverse(sampled)
        self.n_r = rb.n_r
        self._prepared = {}

    def apply(self, v):
        """Weight a full-length residual vector (only sampled entries are read)."""
        return self.operator @ np.asarray(v)[self.indices]

    def make_problem(self, model, basis, incoming, scheme, dt):
        if basis.n_st > self.n_r:
            raise ValueError(f"residual basis ({self.n_r}) is smaller than the "
                             f"trial basis ({basis.n_st}); lower the trial energy or "
                             "raise the residual energy")
        key = (id(basis), id(model), scheme)
        if key not in self._prepared:
            self._prepared = {key: PreparedSampledWindow(model, basis, self.mesh, scheme)}
        return SampledWindowProblem(self._prepared[key], self.operator, model, incoming, dt)


class PreparedSampledWindow:
    """Offline part of the sampled residual: stencil sets and basis rows."""

    def __init__(self, model, basis, mesh, scheme):
        self.cells = mesh.cells
        self.support = model.support(mesh.cells)
        self.cell_pos = np.searchsorted(self.support, self.cells)
        Ac, Bc = temporal_coefficients(scheme, basis.n_steps)
        Ac, Bc = Ac[mesh.times], Bc[mesh.times]
        used = np.flatnonzero(np.any(Ac[:, 1:] != 0, axis=0) | np.any(Bc[:, 1:] != 0, axis=0))
        self.steps = used
        cols = np.concatenate([[0], used + 1])
        self.A = Ac[:, cols]
        self.B = Bc[:, cols]
        self.incoming_velocity = bool(np.any(self.B[:, 0]))
        self.rows = np.stack([basis.row_block(c)[self.support] for c in used])
        self.rows_at_cells = np.ascontiguousarray(self.rows[:, self.cell_pos])


class SampledWindowProblem:
    """Weighted window residual evaluated on the sample mesh only."""

    def __init__(self, prep, operator, model, incoming, dt):
        self.prep, self.W, self.model, self.dt = prep, operator, model, dt
        incoming = np.asarray(incoming, dtype=float)
        self.in_support = incoming[prep.support]
        self.in_cells = incoming[prep.cells]
        self.f_in = None
        if prep.incoming_velocity:
            self.f_in = model.velocity_local(self.in_support[:, None], prep.cells,
                                             prep.support)[:, 0]
        self._y = None

    def _states(self, y):
        if self._y is None or not np.array_equal(self._y, y):
            self._y = np.array(y, dtype=float)
            self._U = self.in_support[:, None] + np.einsum("tcn,n->ct", self.prep.rows, y)
        return self._U

    def residual(self, y):
        prep = self.prep
        U = self._states(y)
        F = self.model.velocity_local(U, prep.cells, prep.support)
        Ucells = np.column_stack([self.in_cells, U[prep.cell_pos]])
        R = Ucells @ prep.A.T - self.dt * (F @ prep.B[:, 1:].T)
        if self.f_in is not None:
            R -= self.dt * np.outer(self.f_in, prep.B[:, 0])
        self.full_residual = R.T.ravel()
        return self.W @ self.full_residual

    def gradient(self, y, r):
        prep = self.prep
        U = self._states(y)
        Jloc = self.model.jacobian_local(U, prep.cells, prep.support)
        G = Jloc @ prep.rows
        Js = (np.einsum("tc,csn->tsn", prep.A[:, 1:], prep.rows_at_cells)
              - self.dt * np.einsum("tc,csn->tsn", prep.B[:, 1:], G))
        WJ = self.W @ Js.reshape(-1, Js.shape[2])
        self._aug = np.column_stack([WJ, -r])
        return WJ.T @ r

    def step(self):
        p, _ = densekit.solve_augmented(np.asfortranarray(self._aug))
        return p


@dataclass
class GnatArtifacts:
    residual_bases: list
    meshes: list
    weights: list
    snapshots: ResidualSnapshots


def train_gnat(models, bases, plan, u0, e_rs, e_rt, z_t, z_s, scheme=BDF1, guess=None,
               params=None, cfg=GaussNewtonConfig(), residual_subwindows=1, snapshots=None):
    """Residual bases, meshes and weights for every window.

    Sample budgets larger than a window are clipped to the window size.
    """
    if snapshots is None:
        snapshots = collect_residual_snapshots(models, bases, plan, u0, scheme, guess,
                                               params, cfg)
    n_space = models[0].n_space
    rbs, meshes, weights = [], [], []
    for k in range(plan.n_windows):
        n = plan.window_steps(k)
        if n % residual_subwindows:
            raise ValueError(f"{residual_subwindows} residual sub-windows do not divide "
                             f"window {k} ({n} steps)")
        subs = (n // residual_subwindows,) * residual_subwindows
        rb = build_residual_basis(snapshots.matrices[k], n_space, subs, e_rs, e_rt)
        mesh = greedy_sample_mesh(rb, min(z_t, n), min(z_s, n_space))
        rbs.append(rb)
        meshes.append(mesh)
        weights.append(GnatWeights(mesh, rb))
    return GnatArtifacts(rbs, meshes, weights, snapshots)


def solve_wst_gnat(model, bases, weights, plan, u0, scheme=BDF1, guess=None, params=None,
                   cfg=GaussNewtonConfig()):
    return solve_wst_lspg(model, bases, plan, u0, scheme, guess, params, cfg, weights=weights)
