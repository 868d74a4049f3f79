"""Command line interface: ``kgedmd run|converge|cluster|validate-kernels``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .kernels import GaussianKernel, PolynomialKernel, fd_validate
from .pipeline import PipelineError, cluster_values, convergence_study, count_inversions, run_experiment, write_report
from .sampling import KdePotential, make_rng


def _fmt(values):
    return ", ".join(f"{complex(v).real:.6g}" + (f"{complex(v).imag:+.2g}j" if complex(v).imag else "")
                     for v in values)


def cmd_run(args):
    cfg = load_config(args.config)
    if args.output:
        cfg.output_dir = args.output
    if args.workers:
        cfg.workers = args.workers
    report = run_experiment(cfg)
    out = write_report(report)
    label = "energies" if report.energies is not None else "eigenvalues"
    print(f"{label}: {_fmt(report.values)}")
    if report.reference is not None:
        print(f"reference: {_fmt(report.reference)}")
    print("timings: " + ", ".join(f"{k} {v:.2f}s" for k, v in report.timings.items()))
    print(f"wrote {out}")
    return 0


def cmd_converge(args):
    cfg = load_config(args.config)
    Ms = [int(m) for m in args.M.split(",")]
    rows = convergence_study(cfg, Ms, args.repeats, args.n)
    print(f"{'M':>8} {'mean error':>12}  per-index mean")
    for r in rows:
        print(f"{r['M']:>8} {r['mean_error']:>12.4g}  " + " ".join(f"{e:.3g}" for e in r["mean"]))
    inv = count_inversions([r["mean_error"] for r in rows])
    print(f"inversions: {inv}")
    if args.output:
        Path(args.output).write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
    return 0


def cmd_cluster(args):
    path = Path(args.report)
    outdir = path if path.is_dir() else path.parent
    with open(outdir / "sample_values.csv", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], np.array(rows[1:], dtype=float)
    cols = [i for i, h in enumerate(header) if h.startswith("phi") and not h.endswith("_im")][: args.k]
    labels = cluster_values(data[:, cols], args.k, args.seed)
    out = outdir / "labels.csv"
    np.savetxt(out, labels, fmt="%d", header="label", comments="")
    counts = np.bincount(labels, minlength=args.k)
    print("cluster sizes: " + " ".join(str(c) for c in counts))
    print(f"wrote {out}")
    return 0


def cmd_validate(args):
    rng = make_rng(args.seed)
    worst = 0.0
    for d in (1, 2, 3):
        for kernel in (GaussianKernel(1.0), PolynomialKernel(3, 1.0)):
            g = h = 0.0
            for _ in range(args.pairs):
                x, y = rng.standard_normal(d), rng.standard_normal(d)
                eg, eh = fd_validate(kernel, x, y)
                g, h = max(g, eg), max(h, eh)
            worst = max(worst, g, h)
            print(f"{type(kernel).__name__:<18} d={d}  grad {g:.2e}  hess {h:.2e}")
    kde = KdePotential(rng.standard_normal((200, 2)), 0.7)
    X = rng.standard_normal((args.pairs, 2))
    step = 1e-5
    fd = np.column_stack([(kde.potential(X + step * e) - kde.potential(X - step * e)) / (2 * step)
                          for e in np.eye(2)])
    err = float(np.max(np.abs(fd - kde.gradient(X)) / (1 + np.abs(fd))))
    worst = max(worst, err)
    print(f"{'KdePotential':<18} d=2  grad {err:.2e}")
    ok = worst < 1e-5
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def main(argv=None):
    p = argparse.ArgumentParser(prog="kgedmd", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment from a config file")
    r.add_argument("config")
    r.add_argument("-o", "--output", help="override output_dir")
    r.add_argument("-j", "--workers", type=int, help="assembly threads")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("converge", help="eigenvalue error versus sample size")
    c.add_argument("config")
    c.add_argument("--M", required=True, help="comma separated sample sizes")
    c.add_argument("--repeats", type=int, default=5)
    c.add_argument("-n", type=int, default=None, help="number of eigenvalues compared")
    c.add_argument("-o", "--output", help="write the table as JSON")
    c.set_defaults(func=cmd_converge)

    k = sub.add_parser("cluster", help="k-means on eigenfunction values of a finished run")
    k.add_argument("report", help="report.json or its directory")
    k.add_argument("-k", type=int, required=True)
    k.add_argument("--seed", type=int, default=0)
    k.set_defaults(func=cmd_cluster)

    v = sub.add_parser("validate-kernels", help="check kernel derivatives against finite differences")
    v.add_argument("--pairs", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_validate)

    args = p.parse_args(argv)
    try:
        return args.func(args)
    except (PipelineError, ValueError, OSError) as err:
        print(f"kgedmd: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
