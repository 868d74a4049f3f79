"""Hydrogen: lowest energies versus the number of uniform samples in the
ball of radius 20, together with the number of samples near the nucleus.

    python3 scripts/hydrogen_sample_size.py --M 1000,2000,5000 --seeds 0,1
"""

import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np

from kgedmd.config import load_config
from kgedmd.pipeline import run_experiment

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "hydrogen.ini"


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--M", default="1000,2000")
    p.add_argument("--seeds", default="0")
    p.add_argument("--radius", type=float, default=None, help="override the ball radius")
    args = p.parse_args()
    base = load_config(CONFIG)
    if args.radius:
        base = replace(base, sampling=replace(base.sampling, radius=args.radius))
    print(f"{'M':>6} {'seed':>4} {'r<3':>5} {'E0':>8}  next levels")
    for M in (int(m) for m in args.M.split(",")):
        for seed in (int(s) for s in args.seeds.split(",")):
            cfg = replace(base, sampling=replace(base.sampling, M=M, seed=seed))
            rep = run_experiment(cfg)
            re = np.sort(np.real(rep.eigenvalues))
            inner = int(np.sum(np.linalg.norm(rep.samples.points, axis=1) < 3))
            print(f"{M:>6} {seed:>4} {inner:>5} {re[0]:>8.4f}  {np.round(re[1:6], 4)}")


if __name__ == "__main__":
    main()
