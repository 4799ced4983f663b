"""Linear multistep schemes, window plans and the windowed space-time residual.

Conventions used throughout the package:

* A full trajectory is an ``(n_space, n_time + 1)`` array whose column ``n``
  holds the state at ``t^n``; column 0 is the initial condition.
* Time-step indices returned by :meth:`WindowPlan.phi` and
  :meth:`WindowPlan.zeta` are 1-based, so they index that full array directly.
* Space-time vectors are time-major: the block of ``n_space`` values for the
  first step comes first. For a window block ``V`` of shape
  ``(n_space, n_steps)`` this is ``V.ravel(order="F")``.
* The first step of every window restarts with BDF1, so a window only ever
  consumes one incoming state.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import sparse


@dataclass(frozen=True)
class LmmScheme:
    """Coefficients of ``sum_j alpha_j u^{n-j} - dt sum_j beta_j f(u^{n-j}) = 0``."""

    name: str
    alpha: tuple
    beta: tuple

    def __post_init__(self):
        if len(self.alpha) != len(self.beta):
            raise ValueError("alpha and beta must have the same length")
        if self.alpha[0] == 0.0:
            raise ValueError("alpha_0 must be nonzero")
        if sum(Fraction(a) for a in self.alpha) != 0:
            raise ValueError(f"{self.name}: coefficients are not consistent")

    @property
    def width(self):
        """Number of previous states the scheme reaches back to."""
        return len(self.alpha) - 1


BDF1 = LmmScheme("BDF1", (1.0, -1.0), (1.0, 0.0))
BDF2 = LmmScheme("BDF2", (float(Fraction(3, 2)), -2.0, float(Fraction(1, 2))),
                 (1.0, 0.0, 0.0))
SCHEMES = {"BDF1": BDF1, "BDF2": BDF2}


def scheme_by_name(name):
    try:
        return SCHEMES[name.upper()]
    except KeyError:
        raise ValueError(f"unknown scheme {name!r}; choose from {sorted(SCHEMES)}") from None


def _steps(length, dt, what):
    ratio = length / dt
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"{what} {length} is not a positive multiple of dt={dt}")
    return n


@dataclass(frozen=True)
class WindowPlan:
    """Partition of ``n_time_total`` steps into windows and sub-windows.

    ``windows[k]`` is the tuple of sub-window step counts of window k.
    """

    dt: float
    windows: tuple

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not self.windows:
            raise ValueError("a plan needs at least one window")
        for k, subs in enumerate(self.windows):
            if not subs or any(int(s) < 1 for s in subs):
                raise ValueError(f"window {k} has an empty sub-window")

    @classmethod
    def uniform(cls, n_time_total, dt, l_w, l_s):
        """Equal windows of length `l_w` split into sub-windows of length `l_s`."""
        n_w = _steps(l_w, dt, "window length")
        n_s = _steps(l_s, dt, "sub-window length")
        if n_s > n_w or n_w % n_s:
            raise ValueError(f"sub-window length {l_s} does not divide window length {l_w}")
        if n_time_total % n_w:
            raise ValueError(f"window length {l_w} does not divide T={n_time_total * dt}")
        subs = (n_s,) * (n_w // n_s)
        return cls(dt, (subs,) * (n_time_total // n_w))

    @classmethod
    def single(cls, n_time_total, dt):
        """One window with one sub-window (the global space-time problem)."""
        return cls(dt, ((n_time_total,),))

    @property
    def n_windows(self):
        return len(self.windows)

    @property
    def n_time_total(self):
        return sum(self.window_steps(k) for k in range(self.n_windows))

    @property
    def window_length(self):
        return self.window_steps(0) * self.dt

    @property
    def subwindow_length(self):
        return self.windows[0][0] * self.dt

    def window_steps(self, k):
        return sum(self.windows[k])

    def n_sub(self, k):
        return len(self.windows[k])

    def sub_steps(self, k, m):
        return self.windows[k][m]

    def phi(self, k):
        """1-based index of the first time step of window k."""
        if not 0 <= k < self.n_windows:
            raise IndexError(f"window {k} out of range [0, {self.n_windows})")
        return 1 + sum(self.window_steps(j) for j in range(k))

    def zeta(self, k, m):
        """1-based index of the first time step of sub-window m of window k."""
        start = self.phi(k)
        if not 0 <= m < self.n_sub(k):
            raise IndexError(f"sub-window {m} out of range for window {k}")
        return start + sum(self.windows[k][:m])

    def sub_offsets(self, k):
        """Local step offsets of the sub-windows of window k (plus the end)."""
        return np.concatenate([[0], np.cumsum(self.windows[k])]).astype(int)


def temporal_coefficients(scheme, n_steps):
    """Time-coupling matrices of a window.

    Returns ``(Ac, Bc)`` of shape ``(n_steps, n_steps + 1)``. Column 0 refers to
    the incoming state and column ``c + 1`` to local step c, so that the
    window residual is ``W @ Ac.T - dt * f(W) @ Bc.T`` with ``W`` the block
    ``[incoming | states]``.
    """
    Ac = np.zeros((n_steps, n_steps + 1))
    Bc = np.zeros_like(Ac)
    for b in range(n_steps):
        s = BDF1 if b == 0 else scheme
        for j, (a, bt) in enumerate(zip(s.alpha, s.beta)):
            col = b + 1 - j
            if col < 0:
                break
            Ac[b, col] += a
            Bc[b, col] += bt
    return Ac, Bc


def _check_block(model, states, incoming):
    V = np.asarray(states, dtype=float)
    u_in = np.asarray(incoming, dtype=float)
    if V.ndim != 2 or V.shape[0] != model.n_space:
        raise ValueError(f"window block must be ({model.n_space}, n_steps), got {V.shape}")
    if u_in.shape != (model.n_space,):
        raise ValueError(f"incoming state must have length {model.n_space}, got {u_in.shape}")
    return V, u_in


def assemble_window_residual(model, states, incoming, scheme, dt):
    """Residual of a window block as an ``(n_space, n_steps)`` array.

    Use ``.ravel(order="F")`` for the space-time vector.
    """
    V, u_in = _check_block(model, states, incoming)
    Ac, Bc = temporal_coefficients(scheme, V.shape[1])
    W = np.column_stack([u_in, V])
    R = W @ Ac.T
    FV = model.velocity(V)
    R -= dt * (FV @ Bc[:, 1:].T)
    if np.any(Bc[:, 0]):
        R -= dt * np.outer(model.velocity(u_in), Bc[:, 0])
    return R


def assemble_window_jacobian(model, states, incoming, scheme, dt, basis, out=None):
    """Product of the window residual Jacobian with a window basis.

    `basis` must provide ``n_st`` and ``row_block(c)`` (the rows of the basis
    belonging to local step c). The result has shape
    ``(n_space * n_steps, n_st)``; pass a preallocated (ideally
    Fortran-ordered) `out` to avoid a copy.
    """
    V, _ = _check_block(model, states, incoming)
    ns, nt = V.shape
    Ac, Bc = temporal_coefficients(scheme, nt)
    if out is None:
        out = np.zeros((ns * nt, basis.n_st), order="F")
    cache = {}

    def terms(c):
        # (P_c, J_f(v_c) P_c) for local step c, computed once each
        if c not in cache:
            P = basis.row_block(c)
            cache[c] = (P, model.jacobian(V[:, c]) @ P)
            cache.pop(c - scheme.width - 1, None)
        return cache[c]

    for b in range(nt):
        Jb = np.zeros((ns, basis.n_st))
        for c in range(max(0, b - scheme.width), b + 1):
            a, bt = Ac[b, c + 1], Bc[b, c + 1]
            if a == 0.0 and bt == 0.0:
                continue
            P, FP = terms(c)
            if a:
                Jb += a * P
            if bt:
                Jb -= (dt * bt) * FP
        out[b * ns:(b + 1) * ns] = Jb
    return out


@dataclass(frozen=True)
class WindowOperators:
    """Linear pieces of ``r = A v - dt B f(v) + A_IC u0 - dt B_IC f(u0)``."""

    A: np.ndarray
    B: np.ndarray
    A_IC: np.ndarray
    B_IC: np.ndarray


def build_window_operators(scheme, n_steps, n_space):
    Ac, Bc = temporal_coefficients(scheme, n_steps)
    eye = sparse.identity(n_space, format="csr")

    def kron(m):
        return sparse.kron(sparse.csr_matrix(m), eye).toarray()

    return WindowOperators(kron(Ac[:, 1:]), kron(Bc[:, 1:]),
                           kron(Ac[:, :1]), kron(Bc[:, :1]))


def window_blocks(full, plan, k):
    """(incoming state, window block) of window k from a full trajectory array."""
    start = plan.phi(k)
    stop = start + plan.window_steps(k)
    if full.shape[1] < stop:
        raise ValueError(f"trajectory has {full.shape[1] - 1} steps, window {k} needs {stop - 1}")
    return full[:, start - 1], full[:, start:stop]
