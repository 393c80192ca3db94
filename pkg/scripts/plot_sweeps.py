#!/usr/bin/env python3
"""Render the aggregate CSV files produced by `seebeam sweep` as PNG figures.

Usage: python scripts/plot_sweeps.py SWEEP_DIR [OUT_DIR]
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_aggregate(path):
    rows = []
    with open(path) as fp:
        for line in fp:
            if line.startswith("#") or line.startswith("experiment,"):
                continue
            exp, grid, algo, stat, value = line.strip().split(",")
            rows.append((float(grid), algo, stat, float(value)))
    return rows


def series(rows, statistic):
    out = {}
    for grid, algo, stat, value in rows:
        if stat == statistic:
            out.setdefault(algo, []).append((grid, value))
    return {a: sorted(v) for a, v in out.items()}


def plot_file(path, out_dir):
    rows = read_aggregate(path)
    name = path.stem.replace("_aggregate", "")
    stats = {"outage": "outage_frequency", "fairness": "see_mean",
             "aux_rate": "see_mean", "harvest": "see_mean",
             "convergence": "asee_mean", "see_vs_t": "see_mean"}
    stat = stats.get(name, "see_mean")
    data = series(rows, stat)
    if not data:
        print(f"skip {path}: no `{stat}` rows")
        return
    fig, ax = plt.subplots(figsize=(6, 4))
    for algo, pts in sorted(data.items()):
        xs, ys = zip(*pts)
        ax.plot(xs, ys, marker="o", label=algo)
    ax.set_xlabel({"outage": "max transmit power (dBm)",
                   "fairness": "secrecy-rate ratio of user 1",
                   "aux_rate": "auxiliary rate (nats/s)",
                   "harvest": "harvest demand (dBm)"}.get(name, "grid value"))
    ax.set_ylabel(stat)
    ax.set_title(name)
    ax.grid(True, alpha=0.4)
    ax.legend()
    out = Path(out_dir) / f"{name}.png"
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    plt.close(fig)
    print(f"wrote {out}")
    if name == "fairness":
        jain = series(rows, "jain_mean")
        if jain:
            fig, ax = plt.subplots(figsize=(6, 4))
            for algo, pts in sorted(jain.items()):
                xs, ys = zip(*pts)
                ax.plot(xs, ys, marker="s", label=f"{algo} fairness index")
            ax.set_xlabel("secrecy-rate ratio of user 1")
            ax.set_ylabel("fairness index")
            ax.grid(True, alpha=0.4)
            ax.legend()
            out = Path(out_dir) / "fairness_index.png"
            fig.tight_layout()
            fig.savefig(out, dpi=130)
            plt.close(fig)
            print(f"wrote {out}")


def main():
    if len(sys.argv) < 2:
        print(__doc__)
        sys.exit(2)
    sweep_dir = Path(sys.argv[1])
    out_dir = Path(sys.argv[2]) if len(sys.argv) > 2 else sweep_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    found = sorted(sweep_dir.glob("*_aggregate.csv"))
    if not found:
        print(f"no *_aggregate.csv files under {sweep_dir}")
        sys.exit(1)
    for path in found:
        plot_file(path, out_dir)


if __name__ == "__main__":
    main()
