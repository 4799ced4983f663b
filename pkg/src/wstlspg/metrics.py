"""Trajectory error measures."""

import json
from dataclasses import asdict, dataclass

import numpy as np

from .windows import assemble_window_residual, window_blocks


def _states(t):
    return t.states if hasattr(t, "states") else np.asarray(t, dtype=float)


def _check(rom, fom):
    a, b = _states(rom), _states(fom)
    if a.shape != b.shape:
        raise ValueError(f"trajectory shapes differ: {a.shape} vs {b.shape}")
    return a, b


def mse(rom, fom):
    """Relative space-time error over steps 1..N_t (the initial state is excluded)."""
    a, b = _check(rom, fom)
    den = np.linalg.norm(b)
    if den == 0.0:
        raise ValueError("reference trajectory is zero")
    return float(np.linalg.norm(a - b) / den)


def imse(rom, fom, dt):
    """Relative l2 error of the rectangle-rule time integral of every DOF."""
    a, b = _check(rom, fom)
    ia, ib = a.sum(axis=1) * dt, b.sum(axis=1) * dt
    den = np.linalg.norm(ib)
    if den == 0.0:
        raise ValueError("time integral of the reference trajectory is zero")
    return float(np.linalg.norm(ia - ib) / den)


def window_residual_norms(traj, model, plan, scheme):
    full = traj.full
    out = []
    for k in range(plan.n_windows):
        incoming, block = window_blocks(full, plan, k)
        out.append(np.linalg.norm(assemble_window_residual(model, block, incoming,
                                                           scheme, plan.dt)))
    return np.array(out)


def residual_l2(traj, model, plan, scheme):
    """Norm of the full space-time residual, accumulated window by window."""
    return float(np.sqrt(np.sum(window_residual_norms(traj, model, plan, scheme) ** 2)))


@dataclass
class ErrorReport:
    mse: float
    imse: float
    residual_l2: float
    wall_time_rom: float
    wall_time_fom: float
    relative_wall_time: float

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value >= 0.0:
                raise ValueError(f"{name} must be nonnegative, got {value}")

    def to_json(self):
        return json.dumps(asdict(self))


def error_report(rom, fom, model, plan, scheme, wall_time_rom, wall_time_fom):
    return ErrorReport(mse(rom, fom), imse(rom, fom, fom.dt),
                       residual_l2(rom, model, plan, scheme),
                       wall_time_rom, wall_time_fom, wall_time_rom / wall_time_fom)
