"""Frequency sweeps used to calibrate the tracking parameters.

Runs the circle and slew benchmarks on the symmetric submarine and the
Heisenberg line and pure-X3 curves, then prints max and final errors per
frequency.  Usage: ``python demos/convergence_study.py [--quick]``.
"""

import argparse
import time

from symtrack.curves import ExpCurve, builtin_curve, heisenberg_group
from symtrack.specfile import load_spec
from symtrack.tracking import frequency_sweep

CASES = [
    ("circle", "submarine-symmetric", lambda: builtin_curve("circle"), 1.0),
    ("slew", "submarine-symmetric", lambda: builtin_curve("attitude_slew"), 1.0),
    ("heisenberg_line", "heisenberg-toy", lambda: builtin_curve("heisenberg_line"), 20.0),
    ("pure_x3", "heisenberg-toy", lambda: ExpCurve(1.0, heisenberg_group(), xi=[0.0, 0.0, 1.0]), 20.0),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="three frequencies and skip the slew")
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    count = 3 if args.quick else 4
    for name, spec, make, f0 in CASES:
        if args.quick and name == "slew":
            continue
        t0 = time.perf_counter()
        runs = frequency_sweep(load_spec(spec).system, make(), f0, count, workers=args.workers)
        print(f"\n{name} on {spec} ({time.perf_counter() - t0:.1f} s)")
        print(f"{'f [Hz]':>8} {'max error':>12} {'final error':>12}")
        for r in runs:
            print(f"{r['omega_osc']:>8g} {r['max_error']:>12.4g} {r.get('final_error', float('nan')):>12.4g}")
        errs = [r["max_error"] for r in runs]
        print("strictly decreasing:", all(b < a for a, b in zip(errs, errs[1:])))


if __name__ == "__main__":
    main()
