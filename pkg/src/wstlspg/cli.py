"""Command line entry point: ``wstlspg <command> ...`` (see ``--help``)."""

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from . import storage
from .bounds import aposteriori_bound, apriori_bound, estimate_lipschitz
from .burgers_fom import BurgersModel, Parameters, fom_march
from .config import Config, load_config
from .hyper import train_gnat
from .metrics import error_report
from .solver import solve_wst_lspg
from .subspaces import fit_initial_guess, train_window_bases
from .sweep import (SweepConfig, TrainingSet, evaluation_parameters, pareto_front,
                    pareto_sweep, training_set_from_config, write_rows)


def _log(msg):
    print(msg, file=sys.stderr, flush=True)


def bundle_name(l_w, l_s, e_a, e_b, prefix="bases"):
    return f"{prefix}_lw{l_w:g}_ls{l_s:g}_e{e_a:g}_{e_b:g}"


def _config(args):
    return load_config(args.config) if getattr(args, "config", None) else Config()


def _save_training(out, training):
    tdir = out / "trajectories"
    tdir.mkdir(parents=True, exist_ok=True)
    with open(out / "params.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "mu1", "mu2"])
        for q, (p, traj) in enumerate(zip(training.params, training.trajectories)):
            w.writerow([q, repr(p.mu1), repr(p.mu2)])
            storage.write_trajectory(tdir / f"train_{q:03d}.wstr", traj)


def _load_training(directory, cfg):
    d = Path(directory)
    params, trajs = [], []
    with open(d / "params.csv", newline="") as fh:
        for r in csv.DictReader(fh):
            params.append(Parameters(float(r["mu1"]), float(r["mu2"])))
            trajs.append(storage.read_trajectory(d / "trajectories" / f"train_{int(r['index']):03d}.wstr"))
    return TrainingSet(params, trajs, cfg.spatial_grid, cfg.time.dt, cfg.time.n_steps, cfg.scheme)


def _training(args, cfg):
    if getattr(args, "artifacts", None) and (Path(args.artifacts) / "params.csv").exists():
        return _load_training(args.artifacts, cfg)
    _log(f"running {cfg.params.counts[0] * cfg.params.counts[1]} training simulations")
    return training_set_from_config(cfg)


def _state_bases(args, cfg, training=None):
    """Bases for the first window/energy setting of the config, loaded or trained."""
    lw, ls = cfg.windows.l_w[0], cfg.windows.l_s[0]
    e_s, e_t = cfg.energy_pairs()[0]
    if getattr(args, "artifacts", None):
        path = Path(args.artifacts) / bundle_name(lw, ls, e_s, e_t)
        if path.exists():
            plan, bases, guess, _ = storage.load_state_bundle(path)
            return plan, bases, guess, training
    training = training or _training(args, cfg)
    plan = training.plan(lw, ls)
    bases = train_window_bases(training.trajectories, plan, e_s, e_t)
    guess = fit_initial_guess(bases, training.trajectories, training.params, plan)
    return plan, bases, guess, training


def cmd_fom(args):
    cfg = _config(args)
    p = Parameters(args.mu1, args.mu2)
    t0 = time.perf_counter()
    traj = fom_march(p, cfg.spatial_grid, cfg.time.dt, cfg.time.n_steps, cfg.scheme)
    _log(f"FOM finished in {time.perf_counter() - t0:.2f} s")
    storage.write_trajectory(args.out, traj)
    if args.csv:
        storage.write_trajectory_csv(args.csv, traj, cfg.spatial_grid.cell_centers)


def cmd_train(args):
    cfg = _config(args)
    out = Path(args.out_dir)
    training = training_set_from_config(cfg)
    _save_training(out, training)
    for lw, ls in SweepConfig.from_config(cfg).window_pairs(training.final_time, training.dt):
        plan = training.plan(lw, ls)
        for e_s, e_t in cfg.energy_pairs():
            _log(f"training bases l_w={lw} l_s={ls} e_s={e_s} e_t={e_t}")
            bases = train_window_bases(training.trajectories, plan, e_s, e_t)
            guess = fit_initial_guess(bases, training.trajectories, training.params, plan)
            storage.save_state_bundle(out / bundle_name(lw, ls, e_s, e_t), plan, bases, guess,
                                      e_s, e_t)


def cmd_gnat_train(args):
    cfg = _config(args)
    out = Path(args.out_dir)
    args.artifacts = args.artifacts or (args.out_dir if (out / "params.csv").exists() else None)
    plan, bases, guess, training = _state_bases(args, cfg)
    training = training or _training(args, cfg)
    snapshots = None
    for e_rs, e_rt in cfg.residual_energy_pairs():
        _log(f"training GNAT e_rs={e_rs} e_rt={e_rt}")
        art = train_gnat(training.models(), bases, plan, training.u0, e_rs, e_rt,
                         cfg.gnat.z_t[0], cfg.gnat.z_s[0], cfg.scheme, guess, training.params,
                         cfg.gauss_newton, cfg.gnat.residual_subwindows, snapshots)
        snapshots = art.snapshots
        name = bundle_name(plan.window_length, plan.subwindow_length, e_rs, e_rt, "residual")
        storage.save_residual_bundle(out / name, plan, art.residual_bases, art.meshes,
                                     e_rs, e_rt)


def cmd_solve(args):
    cfg = _config(args)
    p = Parameters(args.mu1, args.mu2)
    plan, bases, guess, training = _state_bases(args, cfg)
    model = BurgersModel(p, cfg.spatial_grid)
    t0 = time.perf_counter()
    fom = fom_march(p, cfg.spatial_grid, cfg.time.dt, cfg.time.n_steps, cfg.scheme)
    fom_time = time.perf_counter() - t0
    weights = None
    if args.gnat:
        e_rs, e_rt = cfg.residual_energy_pairs()[0]
        name = bundle_name(plan.window_length, plan.subwindow_length, e_rs, e_rt, "residual")
        path = Path(args.artifacts) / name if args.artifacts else None
        if path is not None and path.exists():
            _, _, _, weights = storage.load_residual_bundle(path)
        else:
            training = training or _training(args, cfg)
            weights = train_gnat(training.models(), bases, plan, training.u0, e_rs, e_rt,
                                 cfg.gnat.z_t[0], cfg.gnat.z_s[0], cfg.scheme, guess,
                                 training.params, cfg.gauss_newton,
                                 cfg.gnat.residual_subwindows).weights
    sol = solve_wst_lspg(model, bases, plan, fom.initial, cfg.scheme, guess, p,
                         cfg.gauss_newton, weights=weights)
    storage.write_trajectory(args.out, sol.trajectory)
    storage.write_convergence_csv(f"{args.out}.convergence.csv", sol)
    rep = error_report(sol.trajectory, fom, model, plan, cfg.scheme, sol.wall_time, fom_time)
    record = json.loads(rep.to_json())
    record.update(mu1=p.mu1, mu2=p.mu2, method="GNAT" if args.gnat else "LSPG",
                  l_w=plan.window_length, l_s=plan.subwindow_length,
                  n_st=sum(b.n_st for b in bases), converged=sol.converged)
    line = json.dumps(record)
    with open(f"{args.out}.jsonl", "a") as fh:
        fh.write(line + "\n")
    print(line)


def cmd_sweep(args):
    cfg = _config(args)
    training = _training(args, cfg)
    rows = pareto_sweep(SweepConfig.from_config(cfg), evaluation_parameters(cfg), training,
                        cfg.gauss_newton, log=_log)
    write_rows(args.out, rows)
    for r in pareto_front(rows, "mse"):
        _log(f"Pareto (MSE): {r['method']} l_w={r['l_w']} l_s={r['l_s']} "
             f"mse={r['mse']:.4g} rel_time={r['relative_wall_time']:.4g}")


def cmd_bounds(args):
    cfg = _config(args)
    p = Parameters(args.mu1, args.mu2)
    plan, bases, guess, training = _state_bases(args, cfg)
    model = BurgersModel(p, cfg.spatial_grid)
    fom = fom_march(p, cfg.spatial_grid, cfg.time.dt, cfg.time.n_steps, cfg.scheme)
    cfg_gn = cfg.gauss_newton
    sol = solve_wst_lspg(model, bases, plan, fom.initial, cfg.scheme, guess, p, cfg_gn)
    states = list(fom.full.T) + list(sol.trajectory.full.T)
    kappa = estimate_lipschitz(states, model)
    post = aposteriori_bound(sol.trajectory, fom, model, plan, cfg.scheme, kappa)
    prior = apriori_bound(fom, sol.trajectory, bases, model, plan, cfg.scheme, kappa)
    with open(args.out, "w", newline="") as fh:
        rows = [dict(kind=rep.kind, **r) for rep in (post, prior) for r in rep.rows()]
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    _log(f"kappa_f (lower estimate) = {kappa:.4g}; a posteriori violations: "
         f"{post.violations}; simplified a priori constant = {prior.simplified_constant:.4g}")


def build_parser():
    ap = argparse.ArgumentParser(prog="wstlspg", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, config=True, mu=False, out="--out", artifacts=False):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        sp.add_argument("--config", required=config and name != "fom")
        if mu:
            sp.add_argument("--mu1", type=float, required=True)
            sp.add_argument("--mu2", type=float, required=True)
        sp.add_argument(out, required=True)
        if artifacts:
            sp.add_argument("--artifacts", help="directory written by train / gnat-train")
        return sp

    add("fom", cmd_fom, "run the full-order model", mu=True).add_argument(
        "--csv", help="also write a t,x,u CSV")
    add("train", cmd_train, "training trajectories and state basis bundles", out="--out-dir")
    add("gnat-train", cmd_gnat_train, "residual bases and sample meshes", out="--out-dir",
        artifacts=True)
    add("solve", cmd_solve, "online ROM solve with error report", mu=True,
        artifacts=True).add_argument("--gnat", action="store_true")
    add("sweep", cmd_sweep, "Pareto study written as CSV", artifacts=True)
    add("bounds", cmd_bounds, "per-window error bound report", mu=True, artifacts=True)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        _log(f"error: {exc}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
