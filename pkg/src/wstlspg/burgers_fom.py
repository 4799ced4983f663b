"""Parameterized 1D inviscid Burgers full-order model.

    du/dt + d(u^2/2)/dx = 0.02 exp(mu2 x),   x in [0, 100],   u(x, 0) = 1,

with inflow value ``u(0, t) = mu1``. Space is discretized with first-order
Godunov finite volumes, time with an implicit linear multistep scheme.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .windows import BDF1, temporal_coefficients

MU1_RANGE = (2.0, 4.1)
MU2_RANGE = (0.013, 0.02)
SOURCE_AMPLITUDE = 0.02


@dataclass(frozen=True)
class Parameters:
    mu1: float
    mu2: float

    def in_training_domain(self):
        return (MU1_RANGE[0] <= self.mu1 <= MU1_RANGE[1]
                and MU2_RANGE[0] <= self.mu2 <= MU2_RANGE[1])

    def as_array(self):
        return np.array([self.mu1, self.mu2])


@dataclass(frozen=True)
class SpatialGrid:
    n_cells: int = 200
    x_min: float = 0.0
    x_max: float = 100.0

    def __post_init__(self):
        if self.n_cells < 1 or not self.x_max > self.x_min:
            raise ValueError("grid needs n_cells >= 1 and x_max > x_min")

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def cell_centers(self):
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx


@dataclass(frozen=True)
class Trajectory:
    """Space-time state: ``states[:, n]`` is the solution at ``t^{n+1}``."""

    initial: np.ndarray
    states: np.ndarray
    dt: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        initial = np.asarray(self.initial, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or initial.shape != (states.shape[0],):
            raise ValueError(f"inconsistent shapes {initial.shape} and {states.shape}")
        if not (np.all(np.isfinite(states)) and np.all(np.isfinite(initial))):
            raise ValueError("trajectory has non-finite entries")
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "states", states)

    @classmethod
    def from_full(cls, full, dt, **meta):
        return cls(full[:, 0], full[:, 1:], dt, dict(meta))

    @property
    def n_space(self):
        return self.states.shape[0]

    @property
    def n_time(self):
        return self.states.shape[1]

    @property
    def final_time(self):
        return self.n_time * self.dt

    @property
    def times(self):
        """Times of all columns of :attr:`full`, starting at 0."""
        return np.arange(self.n_time + 1) * self.dt

    @property
    def full(self):
        return np.column_stack([self.initial, self.states])


def flux(u):
    return 0.5 * u * u


def godunov_flux(u_left, u_right):
    """Exact Riemann flux of Burgers' equation (works elementwise on arrays)."""
    return np.maximum(flux(np.maximum(u_left, 0.0)), flux(np.minimum(u_right, 0.0)))


def godunov_flux_derivatives(u_left, u_right):
    """``(dF/du_left, dF/du_right)``; ties take the left-state branch."""
    uL = np.maximum(u_left, 0.0)
    uR = np.minimum(u_right, 0.0)
    left_wins = flux(uL) >= flux(uR)
    return np.where(left_wins, uL, 0.0), np.where(left_wins, 0.0, uR)


class BurgersModel:
    """Godunov finite-volume velocity for one parameter instance."""

    def __init__(self, p, grid=None):
        self.p = p
        self.grid = grid or SpatialGrid()
        self.dx = self.grid.dx
        self.source = SOURCE_AMPLITUDE * np.exp(p.mu2 * self.grid.cell_centers)

    @property
    def n_space(self):
        return self.grid.n_cells

    def _face_fluxes(self, U):
        # fluxes at the n+1 cell faces, inflow ghost on the left
        left = godunov_flux(self.p.mu1, U[:1])
        inner = godunov_flux(U[:-1], U[1:])
        right = flux(U[-1:])
        return np.concatenate([left, inner, right], axis=0)

    def velocity(self, U):
        U = np.asarray(U, dtype=float)
        F = self._face_fluxes(U)
        src = self.source if U.ndim == 1 else self.source[:, None]
        return -(F[1:] - F[:-1]) / self.dx + src

    def jacobian_bands(self, u):
        """(sub, diag, super) diagonals of df/du at the state `u`."""
        u = np.asarray(u, dtype=float)
        dL_in, dR_in = godunov_flux_derivatives(self.p.mu1, u[0])
        dL, dR = godunov_flux_derivatives(u[:-1], u[1:])
        # derivatives of each face flux w.r.t. its left and right cell
        face_dL = np.concatenate([[0.0], dL, [u[-1]]])
        face_dR = np.concatenate([[dR_in], dR, [0.0]])
        diag = -(face_dL[1:] - face_dR[:-1]) / self.dx
        sub = face_dL[1:-1] / self.dx
        sup = -face_dR[1:-1] / self.dx
        return sub, diag, sup

    def jacobian(self, u):
        sub, diag, sup = self.jacobian_bands(u)
        return sparse.diags([sub, diag, sup], [-1, 0, 1], format="csr")

    def support(self, cells):
        cells = np.asarray(cells, dtype=int)
        near = np.concatenate([cells - 1, cells, cells + 1])
        return np.unique(near[(near >= 0) & (near < self.n_space)])

    def _local_columns(self, cells, support):
        cells = np.asarray(cells, dtype=int)
        pos = np.searchsorted(support, cells)
        has_left = cells > 0
        has_right = cells < self.n_space - 1
        return cells, pos, has_left, has_right

    def velocity_local(self, Us, cells, support):
        cells, pos, has_left, has_right = self._local_columns(cells, support)
        u = Us[pos]
        uL = np.where(has_left[:, None], Us[np.maximum(pos - 1, 0)], self.p.mu1)
        uR = Us[np.minimum(pos + 1, len(support) - 1)]
        F_out = np.where(has_right[:, None], godunov_flux(u, uR), flux(u))
        F_in = godunov_flux(uL, u)
        return -(F_out - F_in) / self.dx + self.source[cells][:, None]

    def jacobian_local(self, Us, cells, support):
        cells, pos, has_left, has_right = self._local_columns(cells, support)
        n_t = Us.shape[1]
        u = Us[pos]
        uL = np.where(has_left[:, None], Us[np.maximum(pos - 1, 0)], self.p.mu1)
        uR = Us[np.minimum(pos + 1, len(support) - 1)]
        oL, oR = godunov_flux_derivatives(u, uR)
        oL = np.where(has_right[:, None], oL, u)
        oR = np.where(has_right[:, None], oR, 0.0)
        iL, iR = godunov_flux_derivatives(uL, u)
        out = np.zeros((n_t, len(cells), len(support)))
        rows = np.arange(len(cells))
        out[:, rows, pos] = (-(oL - iR) / self.dx).T
        lft = np.flatnonzero(has_left)
        out[:, lft, pos[lft] - 1] = (iL[lft] / self.dx).T
        rgt = np.flatnonzero(has_right)
        out[:, rgt, pos[rgt] + 1] = (-oR[rgt] / self.dx).T
        return out

    def boundary_fluxes(self, u):
        """(inflow flux, outflow flux) at the state `u`."""
        return float(godunov_flux(self.p.mu1, u[0])), float(flux(u[-1]))


def velocity(u, p, grid=None):
    return BurgersModel(p, grid).velocity(u)


def velocity_jacobian(u, p, grid=None):
    """Dense df/du (tridiagonal; lower bidiagonal when u > 0)."""
    return BurgersModel(p, grid).jacobian(u).toarray()


class NewtonFailure(RuntimeError):
    def __init__(self, step, residual_norm):
        super().__init__(f"Newton did not converge at step {step} "
                         f"(last residual norm {residual_norm:.3e})")
        self.step = step
        self.residual_norm = residual_norm


def march(model, u0, dt, n_steps, scheme=BDF1, rtol=1e-10, max_iters=30):
    """Implicit time integration of ``du/dt = model.velocity(u)``.

    Each step solves its O-Delta-E with Newton's method using the analytic
    Jacobian, until ``||r|| <= rtol * max(||u||, 1)``. The first step uses
    BDF1 whatever `scheme` is.
    """
    full = np.empty((model.n_space, n_steps + 1))
    full[:, 0] = u0
    Ac, Bc = temporal_coefficients(scheme, n_steps)
    eye = sparse.identity(model.n_space, format="csr")
    for n in range(n_steps):
        lo = max(0, n + 1 - scheme.width)
        a0, b0 = Ac[n, n + 1], Bc[n, n + 1]
        past = full[:, lo:n + 1] @ Ac[n, lo:n + 1]
        if np.any(Bc[n, lo:n + 1]):
            past -= dt * (model.velocity(full[:, lo:n + 1]) @ Bc[n, lo:n + 1])
        u = full[:, n].copy()
        for _ in range(max_iters):
            r = a0 * u - dt * b0 * model.velocity(u) + past
            rnorm = np.linalg.norm(r)
            if rnorm <= rtol * max(np.linalg.norm(u), 1.0):
                break
            J = (a0 * eye - (dt * b0) * model.jacobian(u)).tocsc()
            u -= spsolve(J, r)
        else:
            raise NewtonFailure(n + 1, rnorm)
        full[:, n + 1] = u
    return Trajectory.from_full(full, dt)


def fom_march(p, grid=None, dt=0.1, n_steps=256, scheme=BDF1):
    """Burgers trajectory for parameters `p` starting from ``u(x, 0) = 1``."""
    model = BurgersModel(p, grid)
    traj = march(model, np.ones(model.n_space), dt, n_steps, scheme)
    traj.meta.update(mu1=p.mu1, mu2=p.mu2)
    return traj


def conservation_defects(traj, p, grid=None):
    """Per-step imbalance of the discrete integral balance (BDF1 marching).

    Returns ``sum_i (u^n_i - u^{n-1}_i) dx - dt (F_in - F_out + sum_i s_i dx)``
    for each step, which vanishes because interior fluxes telescope.
    """
    model = BurgersModel(p, grid)
    full = traj.full
    out = np.empty(traj.n_time)
    total_source = model.source.sum() * model.dx
    for n in range(1, traj.n_time + 1):
        f_in, f_out = model.boundary_fluxes(full[:, n])
        change = (full[:, n] - full[:, n - 1]).sum() * model.dx
        out[n - 1] = change - traj.dt * (f_in - f_out + total_source)
    return out


def sample_parameter_grid(ranges, counts):
    """Cartesian product of inclusive uniform axes (first axis outermost)."""
    if len(ranges) != 2 or len(counts) != 2:
        raise ValueError("expected ranges and counts for (mu1, mu2)")
    axes = []
    for (lo, hi), n in zip(ranges, counts):
        if int(n) < 1:
            raise ValueError("each axis needs at least one point")
        axes.append(np.linspace(lo, hi, int(n)) if n > 1 else np.array([float(lo)]))
    return [Parameters(float(a), float(b)) for a, b in itertools.product(*axes)]
