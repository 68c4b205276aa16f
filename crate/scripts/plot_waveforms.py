#!/usr/bin/env python3
"""Plot waveform CSVs written by `cvsr simulate`.

usage: plot_waveforms.py OUT_DIR [--cycles N] [--save DIR]

One figure per scenario CSV in OUT_DIR: source voltage and ac current,
flux densities of the three legs, and the voltage induced across the dc
winding. `--cycles` keeps only the last N cycles.
"""

import argparse
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def plot(path, cycles, frequency, save_dir):
    df = pd.read_csv(path)
    if cycles:
        df = df[df["t_s"] >= df["t_s"].iloc[-1] - cycles / frequency]
    t_ms = 1e3 * df["t_s"]
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(9, 8))

    ax = axes[0]
    if "i_ac_A" in df:
        ax.plot(t_ms, df["i_ac_A"], color="C1", label="i_ac [A]")
        ax.legend(loc="upper left")
    if "v_source_V" in df:
        vax = ax.twinx()
        vax.plot(t_ms, df["v_source_V"] / 1e3, color="C0", lw=0.8, label="v_source [kV]")
        vax.legend(loc="upper right")

    ax = axes[1]
    for leg in ("middle", "left", "right"):
        col = f"b_{leg}_T"
        if col in df:
            ax.plot(t_ms, df[col], label=f"B {leg} [T]")
    ax.legend(loc="upper right")

    ax = axes[2]
    if "e_dc_V" in df:
        ax.plot(t_ms, df["e_dc_V"], label="e_dc [V]")
        ax.legend(loc="upper right")
    ax.set_xlabel("t [ms]")

    fig.suptitle(path.stem)
    fig.tight_layout()
    out = save_dir / f"{path.stem}.png"
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir", type=pathlib.Path)
    ap.add_argument("--cycles", type=float, default=0.0)
    ap.add_argument("--frequency", type=float, default=60.0)
    ap.add_argument("--save", type=pathlib.Path)
    args = ap.parse_args()
    save_dir = args.save or args.out_dir
    save_dir.mkdir(parents=True, exist_ok=True)
    for path in sorted(args.out_dir.glob("*.csv")):
        if path.name == "summary.csv":
            continue
        print(plot(path, args.cycles, args.frequency, save_dir))


if __name__ == "__main__":
    main()
