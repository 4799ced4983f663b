"""Residual vs. error trend over window length at fixed l_s = 0.1.

Trains on a 4 x 5 parameter grid, solves the test point for each l_w and
writes one CSV row per window length (residual l2, MSE, IMSE, n_st, time).
Usage: python3 scripts/trend.py --out trend.csv
"""

import argparse
import csv
import time

from scipy import stats

from wstlspg.burgers_fom import BurgersModel, Parameters, SpatialGrid, fom_march
from wstlspg.burgers_fom import sample_parameter_grid
from wstlspg.metrics import imse, mse, residual_l2
from wstlspg.solver import GaussNewtonConfig, solve_wst_lspg
from wstlspg.subspaces import fit_initial_guess, train_window_bases
from wstlspg.sweep import build_training_set


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="trend.csv")
    ap.add_argument("--l-w", type=float, nargs="+", default=[0.1, 0.8, 6.4, 25.6])
    ap.add_argument("--l-s", type=float, default=0.1)
    ap.add_argument("--energy", type=float, default=0.99)
    ap.add_argument("--counts", type=int, nargs=2, default=(4, 5))
    ap.add_argument("--mu", type=float, nargs=2, default=(4.0714, 0.0185))
    args = ap.parse_args()

    test = Parameters(*args.mu)
    params = sample_parameter_grid(((2.0, 4.1), (0.013, 0.02)), args.counts)
    training = build_training_set(params, SpatialGrid(), 0.1, 256)
    fom = fom_march(test)
    model = BurgersModel(test)
    rows = []
    for lw in args.l_w:
        plan = training.plan(lw, args.l_s)
        bases = train_window_bases(training.trajectories, plan, args.energy, args.energy)
        guess = fit_initial_guess(bases, training.trajectories, params, plan)
        t0 = time.perf_counter()
        sol = solve_wst_lspg(model, bases, plan, fom.initial, guess=guess, params=test,
                             cfg=GaussNewtonConfig(allow_nonconverged=True))
        wall = time.perf_counter() - t0
        row = dict(l_w=lw, l_s=args.l_s, n_st=sum(b.n_st for b in bases),
                   residual_l2=residual_l2(sol.trajectory, model, plan, training.scheme),
                   mse=mse(sol.trajectory, fom), imse=imse(sol.trajectory, fom, fom.dt),
                   wall_time=wall, converged=sol.converged)
        rows.append(row)
        print(", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                        for k, v in row.items()), flush=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    rho = stats.spearmanr([r["l_w"] for r in rows], [r["residual_l2"] for r in rows]).statistic
    print(f"Spearman(l_w, residual) = {rho:.3f}")


if __name__ == "__main__":
    main()
