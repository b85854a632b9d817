#!/usr/bin/env python3
"""Plot a CSV written by `coherdist sweep` or `coherdist catalysis`.

    coherdist sweep --state threshold_example --class DIO --m 3 --eps 0..0.6:0.01 -o fig.csv
    python3 docs/plot_csv.py fig.csv -o fig.png

Sweep files are drawn as probability against fidelity, one curve per class.
Catalysis files are drawn as assisted and unassisted probability against q,
one pair of curves per delta. Needs pandas and matplotlib.
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def plot_sweep(df, ax):
    for cls, g in df.groupby("class", sort=False):
        g = g.sort_values("fidelity")
        ax.plot(g["fidelity"], g["probability"], marker=".", label=cls)
    ax.set_xlabel("fidelity")
    ax.set_ylabel("success probability")


def plot_catalysis(df, ax):
    for delta, g in df.groupby("delta"):
        g = g.sort_values("q")
        ax.plot(g["q"], g["p_assisted"], marker=".", label=f"assisted, delta={delta:g}")
    base = df[df["delta"] == df["delta"].min()].sort_values("q")
    ax.plot(base["q"], base["p_unassisted"], "k--", label="unassisted")
    ax.set_xlabel("q")
    ax.set_ylabel("success probability")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("csv")
    p.add_argument("-o", "--output", default="plot.png")
    args = p.parse_args()

    df = pd.read_csv(args.csv)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if "p_assisted" in df.columns:
        plot_catalysis(df, ax)
    else:
        plot_sweep(df, ax)
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


if __name__ == "__main__":
    main()
