#!/usr/bin/env python3
"""Run the backend/word-width comparison grid on one dataset and print a
summary table.

Each run is the standard protocol (784-100-C MLP, SGD, batch 5, lr 0.01,
20 epochs) under a different arithmetic:

    float          double-precision reference
    lin16 / lin12  linear fixed point, Q4.11 / Q4.7
    log16 / log12  log-domain fixed point, LUT or bit-shift corrections

Expects user-supplied IDX files under <data-dir>/<dataset>/ (see README).
"""

import argparse
import sys
from pathlib import Path

from lognn.cli import main as lognn_main

GRID = ["float", "lin16", "lin12", "log16-lut", "log16-bitshift",
        "log12-lut", "log12-bitshift"]


def run():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dataset", default="mnist",
                    choices=["mnist", "fmnist", "emnistd", "emnistl"])
    ap.add_argument("--data-dir", default="data")
    ap.add_argument("--out", default="runs")
    ap.add_argument("--epochs", type=int, default=20)
    ap.add_argument("--limit", type=int, default=None,
                    help="cap training samples for a quick pass")
    ap.add_argument("--only", nargs="*", choices=GRID,
                    help="subset of the grid to run")
    args = ap.parse_args()

    out = Path(args.out)
    metrics = []
    for arith in (args.only or GRID):
        preset = f"{args.dataset}-{arith}"
        print(f"=== {preset} ===", flush=True)
        cmd = ["train", "--preset", preset,
               "--data-dir", args.data_dir, "--out", str(out),
               "--epochs", str(args.epochs)]
        if args.limit:
            cmd += ["--limit", str(args.limit)]
        rc = lognn_main(cmd)
        if rc != 0:
            sys.exit(rc)
        metrics.append(str(out / f"{preset}-metrics.csv"))

    print("\n=== summary (final validation accuracy) ===")
    lognn_main(["summarize", *metrics])


if __name__ == "__main__":
    run()
