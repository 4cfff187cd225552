#!/usr/bin/env python3
"""Variational solution (q*, b0*) and free-energy bound along a line of beta."""
import argparse
import csv
import sys

import numpy as np

from spinbounds.sk_variational import SKParams, at_line_check, classical_q, solve_stationary


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--b1", type=float, default=0.5)
    ap.add_argument("--h", type=float, default=0.0)
    ap.add_argument("--beta-min", type=float, default=0.2)
    ap.add_argument("--beta-max", type=float, default=4.0)
    ap.add_argument("--points", type=int, default=20)
    args = ap.parse_args(argv)

    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["beta", "q_star", "b0_star", "phi_bound", "free_energy_lower", "classical_q", "at_lhs"])
    for beta in np.linspace(args.beta_min, args.beta_max, args.points):
        sel = solve_stationary(SKParams(float(beta), args.b1, args.h)).selected
        qc = classical_q(float(beta), args.h)
        out.writerow(
            [f"{beta:.4f}", sel.q, sel.b0, sel.phi_value, -sel.phi_value / beta, qc, at_line_check(float(beta), args.h, qc).lhs]
        )


if __name__ == "__main__":
    main()
