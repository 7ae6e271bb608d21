"""Worst corrected pf over the 3-7 A load range for a grid of binary banks.

    python scripts/bank_sizing_study.py [--target 0.95]
"""

import argparse

from plc_pfc.scenario import binary_scenario
from plc_pfc.sim import sweep


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--target", type=float, default=0.95)
    args = parser.parse_args()

    loads = [3, 4, 5, 6, 7]
    sizes = [2700, 3300, 3900, 4500, 5100]
    print("q_max \\ steps " + "".join(f"{n:>8}" for n in range(2, 7)))
    for q_max in sizes:
        cells = []
        for steps in range(2, 7):
            rows = sweep(loads, True, binary_scenario(float(q_max), steps))
            worst = min(r.record.corrected_pf for r in rows)
            mark = "*" if worst >= args.target else " "
            cells.append(f"{worst:7.3f}{mark}")
        print(f"{q_max:>13} " + "".join(cells))
    print(f"\n* worst-case pf meets {args.target}")


if __name__ == "__main__":
    main()
