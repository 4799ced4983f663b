"""Online windowed space-time LSPG: Gauss-Newton per window, windows in sequence."""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as la
from scipy import sparse

from . import densekit
from .burgers_fom import Trajectory
from .windows import (BDF1, assemble_window_jacobian, assemble_window_residual,
                      temporal_coefficients)

LINE_SEARCHES = ("unit_step", "backtracking")


@dataclass(frozen=True)
class GaussNewtonConfig:
    tol: float = 1e-6
    max_iters: int = 50
    line_search: str = "unit_step"
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    max_trials: int = 20
    allow_nonconverged: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.line_search not in LINE_SEARCHES:
            raise ValueError(f"line_search must be one of {LINE_SEARCHES}")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must lie in (0, 1)")


@dataclass
class WindowSolveReport:
    window: int
    gradient_norms: list = field(default_factory=list)
    residual_norms: list = field(default_factory=list)
    step_norms: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    converged: bool = False
    residual_snapshots: np.ndarray = None
    wall_time: float = 0.0

    @property
    def iterations(self):
        return len(self.gradient_norms)

    @property
    def final_residual_norm(self):
        return self.residual_norms[-1] if self.residual_norms else float("nan")


@dataclass
class RomSolution:
    coords: list
    trajectory: Trajectory
    reports: list
    wall_time: float = 0.0

    @property
    def converged(self):
        return all(r.converged for r in self.reports)

    def convergence_rows(self):
        """Rows ``(window, iteration, grad_norm, residual_norm, step_norm, lambda)``."""
        rows = []
        for rep in self.reports:
            for i in range(rep.iterations):
                rows.append((rep.window, i, rep.gradient_norms[i], rep.residual_norms[i],
                             rep.step_norms[i], rep.lambdas[i]))
        return rows


class RankDeficientWindow(densekit.LinAlgFailure):
    def __init__(self, window):
        super().__init__(f"Gauss-Newton system of window {window} is rank deficient")
        self.window = window


class WindowDivergence(RuntimeError):
    def __init__(self, report):
        super().__init__(
            f"window {report.window} did not converge in {report.iterations} iterations "
            f"(gradient norm {report.gradient_norms[-1]:.3e})")
        self.report = report


def window_reference_state(previous_end_state, n_steps):
    """The incoming state repeated over every step, as a space-time vector."""
    return np.tile(np.asarray(previous_end_state, dtype=float), n_steps)


def reconstruct_state(basis, reference, y):
    return basis.reconstruct(reference, y)


class WindowProblem:
    """Unweighted window residual in the coordinates of a window basis."""

    def __init__(self, model, basis, incoming, scheme, dt):
        self.model, self.basis, self.scheme, self.dt = model, basis, scheme, dt
        self.incoming = np.asarray(incoming, dtype=float)
        self._y = None
        self._aug = None

    def _states(self, y):
        if self._y is None or not np.array_equal(self._y, y):
            self._y = np.array(y, dtype=float)
            self._V = self.basis.reconstruct(self.incoming, y)
        return self._V

    def residual(self, y):
        V = self._states(y)
        self.full_residual = assemble_window_residual(
            self.model, V, self.incoming, self.scheme, self.dt).ravel(order="F")
        return self.full_residual

    def gradient(self, y, r):
        """Gradient ``J^T r``; keeps ``[J | -r]`` for :meth:`step`."""
        V = self._states(y)
        rows, n = r.size, self.basis.n_st
        if self._aug is None:
            self._aug = np.empty((rows, n + 1), order="F")
        aug = self._aug
        assemble_window_jacobian(self.model, V, self.incoming, self.scheme, self.dt,
                                 self.basis, out=aug[:, :n])
        aug[:, n] = -r
        return -(aug[:, :n].T @ aug[:, n])

    def step(self):
        p, _ = densekit.solve_augmented(self._aug)
        return p


def _line_search(problem, y, p, r, g, cfg):
    """Returns (lambda, y_new, r_new) or None when no acceptable step exists."""
    phi0 = r @ r
    slope = 2.0 * (g @ p)
    lam = 1.0
    if cfg.line_search == "unit_step":
        y1 = y + p
        r1 = problem.residual(y1)
        if r1 @ r1 <= phi0:
            return lam, y1, r1
        lam = cfg.shrink
    for _ in range(cfg.max_trials):
        y1 = y + lam * p
        r1 = problem.residual(y1)
        if r1 @ r1 <= phi0 + cfg.sufficient_decrease * lam * slope:
            return lam, y1, r1
        lam *= cfg.shrink
    return None


def gauss_newton(problem, y0, cfg=GaussNewtonConfig(), window=0, collect_residuals=False):
    """Minimize ``||r(y)||`` from `y0`.

    Iteration i evaluates the residual and gradient at ``y_i`` and stops when
    ``||g_i|| / ||g_0|| < tol`` (i > 0), or when ``||g_i|| < tol`` and the
    computed step is shorter than tol. The accepted iterate is ``y_i``, so
    the report holds one entry (and one residual snapshot) per evaluated
    iterate.
    """
    t0 = time.perf_counter()
    rep = WindowSolveReport(window)
    snaps = []
    y = np.array(y0, dtype=float)
    r = problem.residual(y)
    g0 = None
    for i in range(cfg.max_iters):
        if collect_residuals:
            snaps.append(problem.full_residual.copy())
        g = problem.gradient(y, r)
        gnorm = float(np.linalg.norm(g))
        if g0 is None:
            g0 = gnorm
        rep.gradient_norms.append(gnorm)
        rep.residual_norms.append(float(np.linalg.norm(r)))
        if g0 == 0.0 or (i > 0 and gnorm / g0 < cfg.tol):
            rep.step_norms.append(0.0)
            rep.lambdas.append(0.0)
            rep.converged = True
            break
        p = problem.step()
        if p is None:
            raise RankDeficientWindow(window)
        pnorm = float(np.linalg.norm(p))
        rep.step_norms.append(pnorm)
        if gnorm < cfg.tol and pnorm < cfg.tol:
            rep.lambdas.append(0.0)
            rep.converged = True
            break
        found = _line_search(problem, y, p, r, g, cfg)
        if found is None:
            rep.lambdas.append(0.0)
            break
        lam, y, r = found
        rep.lambdas.append(lam)
    if collect_residuals:
        rep.residual_snapshots = np.column_stack(snaps)
    rep.wall_time = time.perf_counter() - t0
    return y, rep


def solve_wst_lspg(model, bases, plan, u0, scheme=BDF1, guess=None, params=None,
                   cfg=GaussNewtonConfig(), weights=None, collect_residuals=False):
    """Sequential window solves; window k starts from window k-1's end state.

    `guess` is an :class:`~wstlspg.subspaces.InitialGuessModel` evaluated at
    `params`; without it every window starts from zero coordinates.
    `weights`, if given, holds per-window objects with a
    ``make_problem(model, basis, incoming, scheme, dt)`` method (hyper-reduced
    residuals).
    """
    if len(bases) != plan.n_windows:
        raise ValueError(f"{len(bases)} bases for {plan.n_windows} windows")
    t0 = time.perf_counter()
    full = np.empty((model.n_space, plan.n_time_total + 1))
    full[:, 0] = u0
    incoming = full[:, 0]
    coords, reports = [], []
    for k, basis in enumerate(bases):
        if basis.n_steps != plan.window_steps(k):
            raise ValueError(f"basis of window {k} covers {basis.n_steps} steps, "
                             f"plan has {plan.window_steps(k)}")
        if guess is not None and params is not None:
            y0 = guess.predict(k, params)
        else:
            y0 = np.zeros(basis.n_st)
        if weights is None:
            problem = WindowProblem(model, basis, incoming, scheme, plan.dt)
        else:
            problem = weights[k].make_problem(model, basis, incoming, scheme, plan.dt)
        y, rep = gauss_newton(problem, y0, cfg, k, collect_residuals)
        if not rep.converged and not cfg.allow_nonconverged:
            raise WindowDivergence(rep)
        start = plan.phi(k)
        stop = start + plan.window_steps(k)
        full[:, start:stop] = basis.reconstruct(incoming, y)
        incoming = full[:, stop - 1]
        coords.append(y)
        reports.append(rep)
    wall = time.perf_counter() - t0
    traj = Trajectory.from_full(full, plan.dt)
    return RomSolution(coords, traj, reports, wall)


class GlobalProblem:
    """Space-time residual over the whole time domain with an explicit basis.

    Independent of the windowed machinery: the residual and its Jacobian are
    built from global sparse operators and the step uses an explicit thin QR.
    """

    def __init__(self, model, basis_matrix, u0, scheme, dt):
        self.model, self.dt = model, dt
        self.Pi = np.asarray(basis_matrix, dtype=float)
        self.u0 = np.asarray(u0, dtype=float)
        ns = model.n_space
        self.n_time = self.Pi.shape[0] // ns
        Ac, Bc = temporal_coefficients(scheme, self.n_time)
        eye = sparse.identity(ns, format="csr")
        self.A = sparse.kron(sparse.csr_matrix(Ac[:, 1:]), eye, format="csr")
        self.B = sparse.kron(sparse.csr_matrix(Bc[:, 1:]), eye, format="csr")
        self.A_IC = sparse.kron(sparse.csr_matrix(Ac[:, :1]), eye, format="csr")
        self.B_IC = sparse.kron(sparse.csr_matrix(Bc[:, :1]), eye, format="csr")
        self.offset = np.tile(self.u0, self.n_time)

    def states(self, y):
        return self.offset + self.Pi @ y

    def residual(self, y):
        v = self.states(y)
        F = self.model.velocity(v.reshape(self.n_time, -1).T).T.ravel()
        r = (self.A @ v - self.dt * (self.B @ F) + self.A_IC @ self.u0
             - self.dt * (self.B_IC @ self.model.velocity(self.u0)))
        self.full_residual = r
        return r

    def gradient(self, y, r):
        v = self.states(y).reshape(self.n_time, -1)
        Jf = sparse.block_diag([self.model.jacobian(v[c]) for c in range(self.n_time)],
                               format="csr")
        J = (self.A - self.dt * (self.B @ Jf)) @ self.Pi
        self._qr = densekit.thin_qr(J)
        self._r = r
        return J.T @ r

    def step(self):
        Q, R, deficient = self._qr
        if deficient:
            return None
        return la.solve_triangular(R, -(Q.T @ self._r))


def solve_st_lspg(model, basis_matrix, u0, scheme=BDF1, dt=0.1, y0=None,
                  cfg=GaussNewtonConfig()):
    """One global space-time LSPG solve. Returns ``(y, report, states)``."""
    problem = GlobalProblem(model, basis_matrix, u0, scheme, dt)
    if y0 is None:
        y0 = np.zeros(problem.Pi.shape[1])
    y, rep = gauss_newton(problem, y0, cfg)
    if not rep.converged and not cfg.allow_nonconverged:
        raise WindowDivergence(rep)
    states = problem.states(y).reshape(problem.n_time, -1).T
    return y, rep, states
