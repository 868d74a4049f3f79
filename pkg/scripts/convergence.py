"""Eigenvalue error versus sample size for a config with a reference spectrum.

    python3 scripts/convergence.py configs/qho.ini --M 250,500,1000,2000 --repeats 5
"""

import argparse

from kgedmd.config import load_config
from kgedmd.pipeline import convergence_study, count_inversions


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("config")
    p.add_argument("--M", default="250,500,1000,2000")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("-n", type=int, default=4)
    args = p.parse_args()
    rows = convergence_study(load_config(args.config), [int(m) for m in args.M.split(",")],
                             args.repeats, args.n)
    for r in rows:
        per = " ".join(f"{m:.2e}+-{s:.1e}" for m, s in zip(r["mean"], r["std"]))
        print(f"M={r['M']:>6}  mean {r['mean_error']:.3e}  [{per}]")
    print("inversions:", count_inversions([r["mean_error"] for r in rows]))


if __name__ == "__main__":
    main()
