"""Run every shipped config and print the spectrum next to the reference.

    python3 scripts/run_experiments.py [config ...]
"""

import sys
from pathlib import Path

import numpy as np

from kgedmd.config import load_config
from kgedmd.pipeline import run_experiment, write_report

ROOT = Path(__file__).resolve().parents[1]


def main(paths):
    paths = paths or sorted(str(p) for p in (ROOT / "configs").glob("*.ini"))
    for path in paths:
        cfg = load_config(path)
        rep = run_experiment(cfg)
        out = write_report(rep, ROOT / cfg.output_dir)
        vals = np.real(rep.values)
        print(f"{Path(path).stem}: {cfg.system}/{cfg.mode}, M={rep.samples.M}, "
              f"{sum(rep.timings.values()):.1f}s -> {out}")
        print("  computed ", np.array2string(vals, precision=4, max_line_width=120))
        if rep.reference is not None:
            print("  reference", np.array2string(rep.reference, precision=4, max_line_width=120))


if __name__ == "__main__":
    main(sys.argv[1:])
