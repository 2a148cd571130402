#!/usr/bin/env python3
"""Plot the CSV artifacts written by `ccroute montecarlo` and `ccroute sweep`.

Usage: scripts/plot.py OUT_DIR [--save DIR]
"""
import argparse
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read(path):
    with open(path) as f:
        rows = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(rows))


def series(rows, key, x, y, **fixed):
    out = {}
    for r in rows:
        if any(r[k] != str(v) for k, v in fixed.items()):
            continue
        out.setdefault(r[key], []).append((float(r[x]), float(r[y])))
    return {k: sorted(v) for k, v in out.items()}


def draw(ax, groups, xlabel, ylabel, step=False):
    for name, pts in groups.items():
        xs, ys = zip(*pts)
        if step:
            ax.step(xs, ys, where="post", label=name)
        else:
            ax.plot(xs, ys, marker="o", label=name)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    ax.legend()


PLOTS = [
    ("fig4_duration_cdf", "scheme", "duration_s", "fraction", "trip duration (s)", "CDF", True),
    ("fig5_pc_cdf", "scheme", "p_c", "fraction", "P_c", "CDF", True),
    ("fig6_success_vs_gamma", "scheme", "gamma_mbps", "success_pct", "γ (Mbps)", "success %", False),
    ("fig7_pc_vs_bs", "scheme", "bs_count", "mean_pc", "stations", "mean P_c", False),
    ("fig8_success_vs_bs", "scheme", "bs_count", "success_pct", "stations", "success %", False),
    ("fig9_throughput_vs_fc", "policy", "f_c_ghz", "throughput_av_per_min", "f_c (GHz)", "AV/min", False),
    ("fig9_throughput_vs_alpha", "policy", "alpha", "throughput_av_per_min", "α", "AV/min", False),
    ("fig10_throughput_vs_lmtm", "policy", "lambda_m_t_m", "throughput_av_per_min", "λ_m T_m", "AV/min", False),
]


def main():
    p = argparse.ArgumentParser()
    p.add_argument("out_dir")
    p.add_argument("--save", help="directory for PNGs (default: OUT_DIR)")
    args = p.parse_args()
    save = args.save or args.out_dir
    os.makedirs(save, exist_ok=True)

    found = 0
    for name, key, x, y, xl, yl, step in PLOTS:
        path = os.path.join(args.out_dir, name + ".csv")
        if not os.path.exists(path):
            continue
        rows = read(path)
        if "alpha" in rows[0] and x != "alpha":
            # one curve per policy at the first α in the file
            groups = series(rows, key, x, y, alpha=rows[0]["alpha"])
        else:
            groups = series(rows, key, x, y)
        fig, ax = plt.subplots(figsize=(6, 4))
        draw(ax, groups, xl, yl, step)
        fig.tight_layout()
        fig.savefig(os.path.join(save, name + ".png"), dpi=120)
        plt.close(fig)
        print("wrote", os.path.join(save, name + ".png"))
        found += 1
    if not found:
        sys.exit(f"no known CSVs in {args.out_dir}")


if __name__ == "__main__":
    main()
