"""Plot CSVs written by reproduce_figures.py (needs the ``plot`` extra).

    python scripts/plot_figures.py results/normal-approx
"""

import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read(path):
    with open(path) as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def plot_alerts(path, dest):
    rows = read(path)
    mu = [float(r["mu_T"]) for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for key, label in (("p_E", "alerted while exposed"), ("p_I", "alerted while infectious"),
                       ("p_R", "alerted after removal")):
        ax.plot(mu, [float(r[key]) for r in rows], label=label)
    ax.set_xlabel("mean testing delay (days)")
    ax.set_ylabel("probability")
    ax.legend()
    fig.tight_layout()
    fig.savefig(dest, dpi=150)
    plt.close(fig)


def plot_boundaries(path, dest):
    curves = defaultdict(lambda: ([], []))
    for r in read(path):
        if r["alpha_min"]:
            xs, ys = curves[r["scenario_id"]]
            xs.append(float(r["mu_T"]))
            ys.append(float(r["alpha_min"]))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for sid, (xs, ys) in curves.items():
        ax.plot(xs, ys, label=sid)
    ax.set_xlabel("mean testing delay (days)")
    ax.set_ylabel("minimum app uptake for control")
    ax.set_ylim(0, 1)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(dest, dpi=150)
    plt.close(fig)


def main(folder):
    folder = Path(folder)
    for p in sorted(folder.glob("*_alerts.csv")):
        plot_alerts(p, p.with_suffix(".png"))
    for p in sorted(folder.glob("*_boundary.csv")):
        plot_boundaries(p, p.with_suffix(".png"))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "results/normal-approx")
