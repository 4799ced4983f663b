"""Window error bounds built on a Lipschitz estimate of the velocity.

For window k with ``C1 = s_min(A) - dt kappa s_max(B)`` and
``C2 = s_max(A_IC) + dt kappa s_max(B_IC)`` the local a posteriori bound is

    ||e^k|| <= ||r^k(rom)|| / C1 + (C2 / C1) ||e_IC^k||,

and chaining ``||e_IC^k|| <= ||e^{k-1}||`` gives the global bound. The
a priori variant evaluates the residual at the l2 projection of the FOM onto
the window trial space and doubles C2. All of it needs ``C1 > 0``; windows
where that fails are reported as inapplicable.
"""

from dataclasses import dataclass, field

import numpy as np

from . import densekit
from .windows import assemble_window_residual, build_window_operators, window_blocks


def estimate_lipschitz(states, model, n_random=100, scale=1e-2, rng=None):
    """Empirical lower estimate of the Lipschitz constant of ``model.velocity``.

    Takes the largest ratio ``||f(v) - f(w)|| / ||v - w||`` over all pairs of
    the given states plus `n_random` random perturbations of them.
    Identical pairs are skipped.
    """
    S = np.column_stack([np.asarray(s, dtype=float) for s in states])
    if S.shape[1] < 2:
        raise ValueError("need at least two states")
    rng = np.random.default_rng(0) if rng is None else rng
    F = model.velocity(S)
    best = 0.0
    for i in range(S.shape[1] - 1):
        dv = np.linalg.norm(S[:, i + 1:] - S[:, i:i + 1], axis=0)
        df = np.linalg.norm(F[:, i + 1:] - F[:, i:i + 1], axis=0)
        ok = dv > 0
        if np.any(ok):
            best = max(best, float(np.max(df[ok] / dv[ok])))
    size = max(np.abs(S).max(), 1.0) * scale
    for _ in range(n_random):
        v = S[:, rng.integers(S.shape[1])]
        d = rng.standard_normal(v.size) * size
        dv = np.linalg.norm(d)
        if dv > 0:
            best = max(best, float(np.linalg.norm(model.velocity(v + d) - model.velocity(v)) / dv))
    return best


@dataclass
class WindowBound:
    window: int
    kappa_f: float
    sigma_min_A: float
    sigma_max_B: float
    sigma_max_AIC: float
    sigma_max_BIC: float
    C1: float
    C2: float
    residual_norm: float
    ic_error: float
    lhs: float
    local_rhs: float
    global_rhs: float

    @property
    def a2_satisfied(self):
        return self.C1 > 0.0

    @property
    def violated(self):
        return self.a2_satisfied and self.lhs > self.local_rhs * (1 + 1e-12) + 1e-14


@dataclass
class BoundReport:
    kind: str
    windows: list = field(default_factory=list)
    simplified_constant: float = float("nan")

    @property
    def violations(self):
        return [w.window for w in self.windows if w.violated]

    def rows(self):
        keys = ("window", "kappa_f", "sigma_min_A", "sigma_max_B", "sigma_max_AIC",
                "sigma_max_BIC", "C1", "C2", "residual_norm", "ic_error", "lhs",
                "local_rhs", "global_rhs")
        return [dict({k: getattr(w, k) for k in keys}, a2_satisfied=w.a2_satisfied)
                for w in self.windows]


def _sigma(m):
    return densekit.thin_svd(m).singular_values


def window_constants(scheme, n_steps, n_space, dt, kappa_f):
    """Singular values of the window operators and the constants C1, C2.

    The operators are Kronecker products with the identity, so their
    singular values equal those of the small temporal coefficient matrices.
    """
    ops = build_window_operators(scheme, n_steps, 1)
    sA, sB = _sigma(ops.A), _sigma(ops.B)
    sAIC, sBIC = _sigma(ops.A_IC), _sigma(ops.B_IC)
    out = dict(sigma_min_A=float(sA[-1]), sigma_max_B=float(sB[0]),
               sigma_max_AIC=float(sAIC[0]), sigma_max_BIC=float(sBIC[0]))
    out["C1"] = out["sigma_min_A"] - out["sigma_max_B"] * dt * kappa_f
    out["C2"] = out["sigma_max_AIC"] + dt * kappa_f * out["sigma_max_BIC"]
    return out


def _chain(windows, factor):
    prev = windows[0].ic_error if windows else 0.0
    for w in windows:
        if w.C1 <= 0.0 or not np.isfinite(prev):
            w.global_rhs = float("inf")
        else:
            w.global_rhs = w.residual_norm / w.C1 + factor * w.C2 / w.C1 * prev
        prev = w.global_rhs


def aposteriori_bound(rom_traj, fom_traj, model, plan, scheme, kappa_f):
    """Local and global a posteriori bounds of a ROM trajectory, window by window."""
    rom, fom = rom_traj.full, fom_traj.full
    report = BoundReport("a posteriori")
    for k in range(plan.n_windows):
        n = plan.window_steps(k)
        c = window_constants(scheme, n, model.n_space, plan.dt, kappa_f)
        inc, block = window_blocks(rom, plan, k)
        finc, fblock = window_blocks(fom, plan, k)
        rnorm = float(np.linalg.norm(assemble_window_residual(model, block, inc, scheme, plan.dt)))
        ic_err = float(np.linalg.norm(inc - finc))
        lhs = float(np.linalg.norm(block - fblock))
        local = rnorm / c["C1"] + c["C2"] / c["C1"] * ic_err if c["C1"] > 0 else float("inf")
        report.windows.append(WindowBound(k, kappa_f, residual_norm=rnorm, ic_error=ic_err,
                                          lhs=lhs, local_rhs=local, global_rhs=0.0, **c))
    _chain(report.windows, 1.0)
    return report


def project_window(fom_full, basis, plan, k):
    """l2 projection of the FOM window block onto ``incoming + range(Pi^k)``."""
    inc, block = window_blocks(fom_full, plan, k)
    Pi = basis.matrix()
    target = (block - inc[:, None]).ravel(order="F")
    y = densekit.least_squares(Pi, target).x
    return basis.reconstruct(inc, y)


def apriori_bound(fom_traj, rom_traj, bases, model, plan, scheme, kappa_f):
    """A priori bounds; `rom_traj` only supplies the true errors for comparison.

    The residual is evaluated at the projected FOM block, with the FOM state
    entering the window as its initial condition. The simplified global
    constant (exponential in the number of windows) is stored on the report
    for equal windows.
    """
    fom, rom = fom_traj.full, rom_traj.full
    report = BoundReport("a priori")
    for k in range(plan.n_windows):
        n = plan.window_steps(k)
        c = window_constants(scheme, n, model.n_space, plan.dt, kappa_f)
        finc, fblock = window_blocks(fom, plan, k)
        rinc, rblock = window_blocks(rom, plan, k)
        proj = project_window(fom, bases[k], plan, k)
        rnorm = float(np.linalg.norm(assemble_window_residual(model, proj, finc, scheme, plan.dt)))
        ic_err = float(np.linalg.norm(rinc - finc))
        lhs = float(np.linalg.norm(rblock - fblock))
        local = (rnorm / c["C1"] + 2.0 * c["C2"] / c["C1"] * ic_err
                 if c["C1"] > 0 else float("inf"))
        report.windows.append(WindowBound(k, kappa_f, residual_norm=rnorm, ic_error=ic_err,
                                          lhs=lhs, local_rhs=local, global_rhs=0.0, **c))
    _chain(report.windows, 2.0)
    w = report.windows
    if len({plan.window_steps(k) for k in range(plan.n_windows)}) == 1 and w[0].C1 > 0:
        report.simplified_constant = simplified_apriori_constant(w[0], plan.dt, plan.n_windows - 1)
    return report


def simplified_apriori_constant(w, dt, k):
    """Factor multiplying ``max_i ||r^i(projection)||`` in the exponential-in-k bound.

    The sum over windows 0..k is bounded by k + 1 copies of its largest term.
    """
    ratio_B = w.sigma_max_B / w.sigma_min_A
    ratio_IC = w.sigma_max_BIC / w.sigma_max_AIC if w.sigma_max_AIC else 0.0
    x = dt * w.kappa_f * (ratio_IC + ratio_B) / (1.0 - dt * w.kappa_f * ratio_B)
    return float((k + 1) / w.C1 * (2 * w.sigma_max_AIC / w.sigma_min_A) ** k * np.exp(k * x))
