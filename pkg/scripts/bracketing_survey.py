#!/usr/bin/env python3
"""Relative bracket widths of the truncated bounds on random Hermitian instances."""
import argparse

import numpy as np

from spinbounds.bounds import admissible_orders, random_instance, theorem_bounds


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-order", type=int, default=10)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    cases = [random_instance(rng, 1 + k % 3) for k in range(args.trials)]
    print("theorem  n   violations   median width/|exact|")
    for theorem in ("T1", "T2", "T3", "T4"):
        for n in admissible_orders(theorem, args.max_order):
            widths, bad = [], 0
            for ctx, a, _ in cases:
                rep = theorem_bounds(theorem, ctx, a, n)
                bad += not rep.satisfied
                low = rep.exact if rep.lower is None else rep.lower
                widths.append((rep.upper - low) / max(abs(rep.exact), 1e-300))
            print(f"{theorem:7s} {n:2d}   {bad:10d}   {np.median(widths):.3e}")


if __name__ == "__main__":
    main()
