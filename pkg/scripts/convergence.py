#!/usr/bin/env python3
"""Run the standard convergence studies through the CLI and write one CSV per study."""
import argparse
import os

from kronphi.cli import main as cli

STUDIES = [
    ("adr", "euler", "300,400,500,600,700"),
    ("adr", "etd2rk", "300,400,500,600,700"),
    ("ac", "rk3", "100,125,150,175,200"),
    ("bruss", "rk4s5", "40,50,60,70,80"),
    ("bruss", "rk4s6", "40,50,60,70,80"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()
    os.makedirs(args.outdir, exist_ok=True)
    status = 0
    for problem, scheme, steps in STUDIES:
        out = os.path.join(args.outdir, f"converge_{problem}_{scheme}.csv")
        rc = cli(["converge", "--problem", problem, "--scheme", scheme, "--steps", steps, "--out", out])
        print(f"{problem:>6} {scheme:>8}: {'pass' if rc == 0 else 'FAIL'} -> {out}")
        status = max(status, rc)
    return status


if __name__ == "__main__":
    raise SystemExit(main())
