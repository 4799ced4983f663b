"""Training-set construction and the Pareto sweep over ROM configurations."""

import csv
import math
import statistics
import time
from dataclasses import dataclass

from .burgers_fom import BurgersModel, Parameters, fom_march, sample_parameter_grid
from .hyper import train_gnat
from .metrics import imse, mse, residual_l2
from .solver import GaussNewtonConfig, solve_wst_lspg
from .subspaces import fit_initial_guess, train_window_bases
from .windows import BDF1, WindowPlan

COLUMNS = ("method", "mu1", "mu2", "l_w", "l_s", "n_st", "n_st_r", "e_s", "e_t", "e_rs",
           "e_rt", "z_t", "z_s", "mse", "imse", "residual_l2", "wall_time",
           "relative_wall_time", "converged", "error")


@dataclass
class SweepConfig:
    l_w: tuple = (25.6,)
    l_s: tuple = (0.1,)
    energies: tuple = ((0.999, 0.99),)
    gnat: bool = False
    residual_energies: tuple = ((0.999, 0.99),)
    z_t: tuple = (8,)
    z_s: tuple = (40,)
    repetitions: int = 5
    residual_subwindows: int = 1

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")

    def window_pairs(self, final_time, dt):
        """(l_w, l_s) combinations with l_s <= l_w that tile the time domain."""
        out = []
        for lw in self.l_w:
            for ls in self.l_s:
                if ls <= lw + 1e-12 and _divides(lw, final_time, dt) and _divides(ls, lw, dt):
                    out.append((lw, ls))
        return out

    @classmethod
    def from_config(cls, cfg):
        return cls(tuple(cfg.windows.l_w), tuple(cfg.windows.l_s), tuple(cfg.energy_pairs()),
                   cfg.gnat.enabled, tuple(cfg.residual_energy_pairs()), tuple(cfg.gnat.z_t),
                   tuple(cfg.gnat.z_s), cfg.solver.repetitions, cfg.gnat.residual_subwindows)


def _divides(part, whole, dt):
    a, b = round(part / dt), round(whole / dt)
    return a > 0 and abs(a * dt - part) < 1e-9 and b % a == 0


@dataclass
class TrainingSet:
    params: list
    trajectories: list
    grid: object
    dt: float
    n_steps: int
    scheme: object = BDF1

    @property
    def final_time(self):
        return self.dt * self.n_steps

    @property
    def u0(self):
        return self.trajectories[0].initial

    def models(self):
        return [BurgersModel(p, self.grid) for p in self.params]

    def plan(self, l_w, l_s):
        return WindowPlan.uniform(self.n_steps, self.dt, l_w, l_s)


def build_training_set(params, grid, dt, n_steps, scheme=BDF1):
    trajs = [fom_march(p, grid, dt, n_steps, scheme) for p in params]
    return TrainingSet(list(params), trajs, grid, dt, n_steps, scheme)


def training_set_from_config(cfg):
    pc = cfg.params
    params = sample_parameter_grid((pc.mu1_range, pc.mu2_range), pc.counts)
    return build_training_set(params, cfg.spatial_grid, cfg.time.dt, cfg.time.n_steps,
                              cfg.scheme)


def method_label(plan, gnat=False):
    """ST- when one window and one sub-window span the whole domain, WST- otherwise."""
    single = plan.n_windows == 1 and plan.n_sub(0) == 1
    return ("ST-" if single else "WST-") + ("GNAT" if gnat else "LSPG")


def timed_median(fn, repetitions):
    """Runs `fn` `repetitions` times; returns (last result, median wall time)."""
    times, out = [], None
    for _ in range(repetitions):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, statistics.median(times)


@dataclass
class _Baseline:
    trajectory: object
    wall_time: float


def _row(method, p, lw, ls, **kw):
    row = dict.fromkeys(COLUMNS, float("nan"))
    row.update(method=method, mu1=p.mu1, mu2=p.mu2, l_w=lw, l_s=ls, converged=False, error="")
    row.update(kw)
    return row


def _evaluate(row, solve, fom, model, plan, scheme, baseline, repetitions):
    try:
        sol, wall = timed_median(solve, repetitions)
    except Exception as exc:  # recorded, the sweep continues
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    rom = sol.trajectory
    row.update(mse=mse(rom, fom), imse=imse(rom, fom, fom.dt),
               residual_l2=residual_l2(rom, model, plan, scheme), wall_time=wall,
               relative_wall_time=wall / baseline.wall_time, converged=sol.converged)
    return row


def pareto_sweep(cfg, test_params, training, gn=GaussNewtonConfig(), log=None):
    """One row per (test parameter, configuration); see :data:`COLUMNS`.

    Configurations run one after another so that timings do not compete for
    the CPU. Training is not timed. Failures become rows with
    ``converged=False`` and the exception text in ``error``.
    """
    test_params = list(test_params)
    if not test_params:
        raise ValueError("no test parameters given")
    scheme = training.scheme
    rows = []
    baselines = {}
    for p in test_params:
        traj, wall = timed_median(
            lambda p=p: fom_march(p, training.grid, training.dt, training.n_steps, scheme),
            cfg.repetitions)
        baselines[p] = _Baseline(traj, wall)
    u0 = training.u0
    for lw, ls in cfg.window_pairs(training.final_time, training.dt):
        plan = training.plan(lw, ls)
        for e_s, e_t in cfg.energies:
            if log:
                log(f"training l_w={lw} l_s={ls} e_s={e_s} e_t={e_t}")
            try:
                bases = train_window_bases(training.trajectories, plan, e_s, e_t)
                guess = fit_initial_guess(bases, training.trajectories, training.params, plan)
            except Exception as exc:
                for p in test_params:
                    rows.append(_row(method_label(plan), p, lw, ls, e_s=e_s, e_t=e_t,
                                     error=f"{type(exc).__name__}: {exc}"))
                continue
            n_st = sum(b.n_st for b in bases)
            for p in test_params:
                model = BurgersModel(p, training.grid)
                base = baselines[p]
                row = _row(method_label(plan), p, lw, ls, n_st=n_st, e_s=e_s, e_t=e_t)
                rows.append(_evaluate(
                    row, lambda: solve_wst_lspg(model, bases, plan, u0, scheme, guess, p, gn),
                    base.trajectory, model, plan, scheme, base, cfg.repetitions))
            if cfg.gnat:
                rows.extend(_gnat_rows(cfg, training, plan, bases, guess, n_st, e_s, e_t,
                                       test_params, baselines, gn, log))
    return rows


def _gnat_rows(cfg, training, plan, bases, guess, n_st, e_s, e_t, test_params, baselines,
               gn, log):
    rows, snapshots = [], None
    scheme, u0 = training.scheme, training.u0
    lw, ls = plan.window_length, plan.subwindow_length
    for e_rs, e_rt in cfg.residual_energies:
        for z_t in cfg.z_t:
            for z_s in cfg.z_s:
                common = dict(n_st=n_st, e_s=e_s, e_t=e_t, e_rs=e_rs, e_rt=e_rt, z_t=z_t,
                              z_s=z_s)
                if log:
                    log(f"  gnat e_rs={e_rs} e_rt={e_rt} z_t={z_t} z_s={z_s}")
                try:
                    art = train_gnat(training.models(), bases, plan, u0, e_rs, e_rt, z_t, z_s,
                                     scheme, guess, training.params, gn,
                                     cfg.residual_subwindows, snapshots)
                except Exception as exc:
                    for p in test_params:
                        rows.append(_row(method_label(plan, True), p, lw, ls, **common,
                                         error=f"{type(exc).__name__}: {exc}"))
                    continue
                snapshots = art.snapshots
                n_r = sum(rb.n_r for rb in art.residual_bases)
                for p in test_params:
                    model = BurgersModel(p, training.grid)
                    base = baselines[p]
                    row = _row(method_label(plan, True), p, lw, ls, n_st_r=n_r, **common)
                    rows.append(_evaluate(
                        row, lambda: solve_wst_lspg(model, bases, plan, u0, scheme, guess, p,
                                                    gn, weights=art.weights),
                        base.trajectory, model, plan, scheme, base, cfg.repetitions))
    return rows


def pareto_front(rows, error_column="mse", time_column="relative_wall_time"):
    """Rows not strictly dominated in (error, time); rows with NaN entries are dropped."""
    if not rows:
        raise ValueError("no rows")
    pts = [(r[error_column], r[time_column]) for r in rows]
    ok = [not (math.isnan(e) or math.isnan(t)) for e, t in pts]
    front = []
    for i, (e, t) in enumerate(pts):
        if not ok[i]:
            continue
        dominated = any(ok[j] and e2 <= e and t2 <= t and (e2 < e or t2 < t)
                        for j, (e2, t2) in enumerate(pts))
        if not dominated:
            front.append(rows[i])
    return front


def write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow(r)


def read_rows(path):
    out = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            row = {}
            for k, v in r.items():
                if k in ("method", "error"):
                    row[k] = v
                elif k == "converged":
                    row[k] = v == "True"
                else:
                    row[k] = float(v) if v not in ("", None) else float("nan")
            out.append(row)
    return out


def evaluation_parameters(cfg):
    return [Parameters(*cfg.params.test)]
