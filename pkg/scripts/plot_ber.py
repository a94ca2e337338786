"""Plot BER-vs-SNR curves from CSVs written by ``maedsim`` or run_figures.py.

    python3 scripts/plot_ber.py results/fig2a.csv --out fig2a.png

Needs matplotlib (``pip install .[plot]``).
"""

import argparse
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from maedsim.harness import read_csv  # noqa: E402


def plot(paths, out, floor=1e-6):
    fig, ax = plt.subplots(figsize=(5, 4))
    for path in paths:
        curves = defaultdict(list)
        for row in read_csv(path):
            curves[row["detector"]].append((row["snr_db"], row["ber"]))
        tag = "" if len(paths) == 1 else f" ({path})"
        for det, pts in curves.items():
            pts.sort()
            snr = [s for s, _ in pts]
            # zero-error points are drawn at the floor so the curve stays visible
            ber = [max(b, floor) for _, b in pts]
            ax.semilogy(snr, ber, marker="o", ms=3, label=det + tag)
    ax.set_xlabel("average receive SNR [dB]")
    ax.set_ylabel("uncoded BER")
    ax.set_ylim(floor, 1)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def main(argv=None):
    ap = argparse.ArgumentParser(description="plot BER curves")
    ap.add_argument("csv", nargs="+")
    ap.add_argument("--out", default="ber.png")
    args = ap.parse_args(argv)
    plot(args.csv, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
