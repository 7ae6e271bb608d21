"""Plot voltage/current and phase-detector waveforms for one load current.

    python scripts/plot_waveforms.py --current 7 [--compensated] [--save fig.png]

Needs matplotlib.
"""

import argparse
import csv
import io

import matplotlib.pyplot as plt

from plc_pfc.scenario import binary_scenario, paper_scenario
from plc_pfc.sim import dump_waveforms


def _columns(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    return {k: [float(r[k]) for r in rows] for k in rows[0]}


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--current", type=float, default=3.0)
    parser.add_argument("--compensated", action="store_true")
    parser.add_argument("--greedy", action="store_true", help="binary 2700 VAr bank instead of the lab combos")
    parser.add_argument("--save")
    args = parser.parse_args()

    cfg = binary_scenario() if args.greedy else paper_scenario()
    dumps = dump_waveforms(args.current, cfg, cycles=2, compensated=args.compensated)
    fig, axes = plt.subplots(2, len(dumps), figsize=(6 * len(dumps), 6), squeeze=False)
    for col, (label, text) in enumerate(dumps.items()):
        d = _columns(text)
        t_ms = [t * 1e3 for t in d["t_s"]]
        ax = axes[0][col]
        ax.plot(t_ms, d["v_volts"], label="v phase [V]")
        ax2 = ax.twinx()
        ax2.plot(t_ms, d["i_amperes"], color="tab:red", label="i line [A]")
        ax.set_title(f"{args.current:g} A, {label}")
        ax = axes[1][col]
        ax.step(t_ms, [x + 2.4 for x in d["v_square"]], where="post", label="v square")
        ax.step(t_ms, [x + 1.2 for x in d["i_square"]], where="post", label="i square")
        ax.step(t_ms, d["xor_level"], where="post", label="XOR")
        ax.set_xlabel("t [ms]")
        ax.set_yticks([])
        ax.legend(loc="upper right", fontsize="small")
    fig.tight_layout()
    if args.save:
        fig.savefig(args.save, dpi=120)
    else:
        plt.show()


if __name__ == "__main__":
    main()
