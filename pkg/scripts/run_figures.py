"""Run every figure preset and write one CSV per figure.

    python3 scripts/run_figures.py --frames 1000 --out results/
    python3 scripts/run_figures.py fig2a fig4b --frames 200 --workers 4
"""

import argparse
import os
import sys
import time

from maedsim.harness import DEFAULT_FIGURE_GRID, emit_csv, figure_presets, figure_spec, parse_grid, run_experiment


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("figures", nargs="*", help="preset names (default: all)")
    ap.add_argument("--frames", type=int, default=1000)
    ap.add_argument("--snr-db", help="grid override, e.g. -6:20:2")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args(argv)

    names = args.figures or sorted(figure_presets())
    grid = parse_grid(args.snr_db) if args.snr_db else DEFAULT_FIGURE_GRID
    os.makedirs(args.out, exist_ok=True)
    for name in names:
        spec = figure_spec(name, frames=args.frames, snr_grid_db=grid, master_seed=args.seed, workers=args.workers)
        t0 = time.perf_counter()
        records = run_experiment(spec)
        path = os.path.join(args.out, f"{name}.csv")
        emit_csv(records, path)
        print(f"{name}: {len(records)} records in {time.perf_counter() - t0:.1f} s -> {path}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
