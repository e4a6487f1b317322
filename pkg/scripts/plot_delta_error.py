#!/usr/bin/env python3
"""Print the approximation-error profile of each correction-term evaluator.

For the 16-bit log format this shows the accuracy ladder the training
results follow: exact (grid-limited) < fine LUT < coarse LUT < bit-shift.
"""

import argparse

from lognn import DeltaApproximator, LnsFormat, error_profile
from lognn.delta import build_table


def run():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qi", type=int, default=4)
    ap.add_argument("--qf", type=int, default=10)
    args = ap.parse_args()

    fmt = LnsFormat(args.qi, args.qf)
    rows = [
        ("exact", DeltaApproximator.exact(fmt)),
        ("lut r=1/64", DeltaApproximator.lut(build_table(10.0, 1 / 64, fmt))),
        ("lut r=1/2", DeltaApproximator.lut(build_table(10.0, 0.5, fmt))),
        ("bitshift", DeltaApproximator.bitshift(fmt)),
    ]
    print(f"format q{args.qi}.{args.qf}  (grid step 2^-{args.qf})")
    print(f"{'evaluator':<12} {'plus max':>10} {'plus mean':>10} "
          f"{'minus max':>10} {'minus mean':>10}")
    for name, d in rows:
        p = error_profile(d)
        print(f"{name:<12} {p['plus_max']:>10.2e} {p['plus_mean']:>10.2e} "
              f"{p['minus_max']:>10.2e} {p['minus_mean']:>10.2e}")


if __name__ == "__main__":
    run()
