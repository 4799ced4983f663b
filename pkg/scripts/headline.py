"""Headline accuracy run: full 100-point training grid, l_w = 25.6, l_s = 0.1.

Usage: python3 scripts/headline.py [--e-s 0.999] [--e-t 0.99] [--l-s 0.1]
"""

import argparse
import resource
import time

from wstlspg.burgers_fom import BurgersModel, Parameters, SpatialGrid, fom_march
from wstlspg.burgers_fom import sample_parameter_grid
from wstlspg.metrics import imse, mse
from wstlspg.solver import GaussNewtonConfig, solve_wst_lspg
from wstlspg.subspaces import fit_initial_guess, train_window_bases
from wstlspg.sweep import build_training_set

TEST = Parameters(4.0714, 0.0185)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--e-s", type=float, default=0.999)
    ap.add_argument("--e-t", type=float, default=0.99)
    ap.add_argument("--l-w", type=float, default=25.6)
    ap.add_argument("--l-s", type=float, default=0.1)
    ap.add_argument("--counts", type=int, nargs=2, default=(20, 5))
    args = ap.parse_args()

    t0 = time.perf_counter()
    params = sample_parameter_grid(((2.0, 4.1), (0.013, 0.02)), args.counts)
    training = build_training_set(params, SpatialGrid(), 0.1, 256)
    t1 = time.perf_counter()
    plan = training.plan(args.l_w, args.l_s)
    bases = train_window_bases(training.trajectories, plan, args.e_s, args.e_t)
    guess = fit_initial_guess(bases, training.trajectories, params, plan)
    t2 = time.perf_counter()
    print(f"FOM training {t1 - t0:.1f} s, bases {t2 - t1:.1f} s, "
          f"n_st = {sum(b.n_st for b in bases)}", flush=True)
    fom = fom_march(TEST)
    sol = solve_wst_lspg(BurgersModel(TEST), bases, plan, fom.initial, guess=guess,
                         params=TEST, cfg=GaussNewtonConfig())
    t3 = time.perf_counter()
    iters = [r.iterations for r in sol.reports]
    peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024
    print(f"solve {t3 - t2:.1f} s, GN iterations {iters[:8]}{'...' if len(iters) > 8 else ''}, "
          f"peak RSS {peak:.0f} MB")
    print(f"MSE {mse(sol.trajectory, fom):.6g}  IMSE {imse(sol.trajectory, fom, 0.1):.6g}  "
          f"total {t3 - t0:.1f} s")


if __name__ == "__main__":
    main()
