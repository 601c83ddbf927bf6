#!/usr/bin/env python3
"""CSV-in, PNG-out convenience plotter for overlap sweeps (no contract).

Reads a harness sweep CSV (sos / mps / projection / oligomer) and plots the
overlap column against the sweep parameter.
"""

import argparse
import csv
import sys


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv_path")
    parser.add_argument("--out", default=None, help="PNG path (default: <csv>.png)")
    args = parser.parse_args()

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(args.csv_path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        print("empty csv", file=sys.stderr)
        return 2
    x_key = next(k for k in ("L", "D", "K", "k") if k in rows[0])
    y_key = "achieved_overlap" if "achieved_overlap" in rows[0] else "overlap"
    xs = [float(r[x_key]) for r in rows]
    ys = [float(r[y_key]) for r in rows]

    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(xs, ys, "o-")
    ax.set_xlabel(x_key)
    ax.set_ylabel(y_key)
    ax.set_ylim(min(ys) - 0.02, 1.005)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    out = args.out or f"{args.csv_path}.png"
    fig.savefig(out, dpi=150)
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
