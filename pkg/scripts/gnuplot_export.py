"""Turn a sweep CSV into gnuplot data files plus a plot script.

Writes ``<prefix>_<method>.dat`` (relative wall time, error) per method,
``<prefix>_front.dat`` with the Pareto front and ``<prefix>.gp``.
Usage: python3 scripts/gnuplot_export.py sweep.csv --error mse --prefix pareto
"""

import argparse
import math
from collections import defaultdict

from wstlspg.sweep import pareto_front, read_rows


def write_dat(path, rows, error):
    with open(path, "w") as fh:
        fh.write(f"# relative_wall_time {error} l_w l_s n_st\n")
        for r in sorted(rows, key=lambda r: r["relative_wall_time"]):
            fh.write(f"{r['relative_wall_time']:.8g} {r[error]:.8g} {r['l_w']:g} {r['l_s']:g} "
                     f"{r['n_st']:g}\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("--error", default="mse", choices=("mse", "imse", "residual_l2"))
    ap.add_argument("--prefix", default="pareto")
    args = ap.parse_args()

    rows = [r for r in read_rows(args.csv)
            if not (math.isnan(r[args.error]) or math.isnan(r["relative_wall_time"]))]
    if not rows:
        raise SystemExit("no plottable rows")
    by_method = defaultdict(list)
    for r in rows:
        by_method[r["method"]].append(r)
    plots = []
    for method, group in sorted(by_method.items()):
        path = f"{args.prefix}_{method}.dat"
        write_dat(path, group, args.error)
        plots.append(f"'{path}' using 1:2 with points title '{method}'")
    write_dat(f"{args.prefix}_front.dat", pareto_front(rows, args.error), args.error)
    plots.append(f"'{args.prefix}_front.dat' using 1:2 with linespoints title 'Pareto front'")
    with open(f"{args.prefix}.gp", "w") as fh:
        fh.write("set logscale xy\nset xlabel 'relative wall time'\n"
                 f"set ylabel '{args.error}'\nset key outside\n")
        fh.write("plot " + ", \\\n     ".join(plots) + "\n")
    print(f"wrote {len(by_method)} method files, front and {args.prefix}.gp")


if __name__ == "__main__":
    main()
