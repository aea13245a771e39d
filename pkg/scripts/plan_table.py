#!/usr/bin/env python3
"""Quadrature plans for the complex-Laplacian validation operator.

Prints (s, q, predicted T) for both modes and, with --measure, the number of
Tucker operators actually applied.
"""
import argparse

import numpy as np

from kronphi.phi import phiks_lincomb, phiks_same_vector
from kronphi.problems import validation_operator
from kronphi.quadrature import range_rectangle, select_plan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[16, 32, 64, 100])
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--p", type=int, default=5)
    ap.add_argument("--s-hat", type=int, default=1)
    ap.add_argument("--measure", action="store_true", help="run the computation and count operators")
    args = ap.parse_args()
    delta = 2.0 ** -53
    print(f"{'n':>5} {'mode':>12} {'s':>3} {'q':>3} {'T':>4} {'measured':>9}")
    for n in args.n:
        k, v = validation_operator(n, args.d)
        rect = range_rectangle(k.factors)
        nv = float(np.linalg.norm(v))
        for mode in ("same_vector", "lincomb"):
            plan = select_plan(mode, rect, args.p, [nv] * (1 if mode == "same_vector" else args.p),
                               delta, s_hat=args.s_hat)
            used = ""
            if args.measure:
                if mode == "same_vector":
                    r = phiks_same_vector(k, v, args.p, delta, s_hat=args.s_hat, plan=plan)
                else:
                    r = phiks_lincomb(k, None, [v] * args.p, delta, s_hat=args.s_hat, plan=plan)
                used = str(r.tucker_ops_used)
            print(f"{n:>5} {mode:>12} {plan.s:>3} {plan.q:>3} {plan.T_predicted:>4} {used:>9}")


if __name__ == "__main__":
    main()
