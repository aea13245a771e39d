"""Command-line harness: oracle validation, convergence studies and timings."""
import argparse
import csv
from dataclasses import asdict, dataclass, fields
import io
import math
import os
import subprocess
import sys
import time

import numpy as np

from . import oracle
from .integrators import DeltaPolicy, get_scheme, integrate
from .phi import phiks_lincomb, phiks_same_vector
from .problems import PROBLEMS, validation_operator
from .tensor import inf_norm

DEFAULT_N = {"adr": 20, "ac": 21, "bruss": 11}


@dataclass
class RunRecord:
    command: str
    problem: str = ""
    scheme: str = ""
    mode: str = ""
    n: int = 0
    d: int = 0
    p: int = 0
    scale: int = 0
    ell: int = 0
    n_steps: int = 0
    delta: float = math.nan
    error_inf_rel: float = math.nan
    wall_seconds: float = math.nan
    tucker_ops_total: int = 0
    tucker_ops_per_step: float = math.nan
    plan_s: int = -1
    plan_q: int = -1
    plan_T: int = -1


HEADER = [f.name for f in fields(RunRecord)]


def _fmt(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _git_hash():
    try:
        out = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True,
                             text=True, timeout=5, cwd=os.path.dirname(__file__))
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def write_csv(stream, records, meta):
    for k, v in meta.items():
        stream.write(f"# {k}: {v}\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(HEADER)
    for r in records:
        w.writerow([_fmt(v) for v in asdict(r).values()])


def read_csv(text):
    """Inverse of ``write_csv``: ``(meta, records)``."""
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            meta[k] = v
        elif line:
            body.append(line)
    rows = list(csv.DictReader(io.StringIO("\n".join(body))))
    types = {f.name: f.type for f in fields(RunRecord)}
    conv = {"int": int, "float": float, "str": str, int: int, float: float, str: str}
    recs = [RunRecord(**{k: conv[types[k]](v) for k, v in row.items()}) for row in rows]
    return meta, recs


def _rel(a, b):
    den = inf_norm(b)
    return inf_norm(a - b) / (den if den > 0 else 1.0)


def _parse_tol(s):
    s = s.strip()
    if s.startswith("2^"):
        return 2.0 ** float(s[2:])
    return float(s)


def _int_list(s):
    return [int(x) for x in s.replace(",", " ").split()]


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args):
    if args.p < 1:
        raise UsageError("--p must be at least 1")
    k, v = validation_operator(args.n, args.d)
    if args.seed is not None and args.random_vector:
        rng = np.random.default_rng(args.seed)
        v = rng.standard_normal(v.shape) + 1j * rng.standard_normal(v.shape)
    tol = args.tol
    have_oracle = k.size + args.p <= oracle.MAX_DENSE
    recs = []
    ok = True
    t0 = time.perf_counter()
    if args.mode == "same":
        res = phiks_same_vector(k, v, args.p, tol, s_hat=args.s_hat)
    else:
        vs = [v] * args.p
        res = phiks_lincomb(k, None, vs, tol, s_hat=args.s_hat)
    wall = time.perf_counter() - t0
    plan = res.plan
    base = dict(command="validate", problem="validation", mode=args.mode, n=args.n, d=args.d,
                p=args.p, delta=tol, wall_seconds=wall, tucker_ops_total=res.tucker_ops_used,
                plan_s=plan.s, plan_q=plan.q, plan_T=plan.T_predicted)
    ok &= res.tucker_ops_used <= plan.T_predicted
    for j in range(args.s_hat + 1):
        if args.mode == "same":
            ref = oracle.tensor_phi_actions(k, v, args.p, j) if have_oracle else None
            for ell in range(1, args.p + 1):
                err = _rel(res.phi(ell, j), ref[ell - 1]) if have_oracle else math.nan
                ok &= not have_oracle or err <= args.threshold
                recs.append(RunRecord(scale=j, ell=ell, error_inf_rel=err, **base))
        else:
            err = math.nan
            if have_oracle:
                err = _rel(res.combo(j), oracle.tensor_lincomb(k, None, vs, j))
                ok &= err <= args.threshold
            recs.append(RunRecord(scale=j, ell=args.p, error_inf_rel=err, **base))
    meta = dict(threshold=args.threshold, oracle="dense" if have_oracle else "none (plan only)")
    return recs, meta, ok


def _reference(prob, args, finest):
    if prob.exact is not None and not args.force_reference:
        return prob.exact(prob.T), "analytic"
    ref, _ = integrate(prob, "rk4s6", args.ref_factor * finest,
                       delta_policy=DeltaPolicy(args.c_exp))
    return ref, f"rk4s6 with {args.ref_factor}x the finest step count"


def _max_rel(u, ref):
    num = max(inf_norm(a - b) for a, b in zip(u, ref))
    den = max(inf_norm(b) for b in ref)
    return num / den


def cmd_converge(args):
    n = args.n or DEFAULT_N[args.problem]
    prob = PROBLEMS[args.problem](n)
    sch = get_scheme(args.scheme)
    steps = args.steps
    ref, how = _reference(prob, args, max(steps))
    recs = []
    policy = DeltaPolicy(args.c_exp)
    for m in steps:
        t0 = time.perf_counter()
        u, st = integrate(prob, sch, m, delta_policy=policy)
        wall = time.perf_counter() - t0
        recs.append(RunRecord("converge", args.problem, args.scheme, "", n, prob.blocks[0].d, 0, 0, 0, m,
                              math.nan, _max_rel(u, ref), wall, st.tucker_ops,
                              st.tucker_ops_per_step))
    errs = np.array([r.error_inf_rel for r in recs])
    slope = math.nan
    if len(steps) >= 2 and np.all(errs > 0):
        slope = -np.polyfit(np.log(steps), np.log(errs), 1)[0]
    target = sch.order if args.expect is None else args.expect
    ok = len(steps) < 2 or abs(slope - target) <= args.slope_tol
    meta = dict(reference=how, slope=_fmt(float(slope)), expected_slope=target,
                slope_tol=args.slope_tol, delta_c_exp=args.c_exp)
    return recs, meta, ok


def cmd_bench(args):
    sch = get_scheme(args.scheme)
    recs = []
    if args.steps > 0:
        for n in args.n:
            prob = PROBLEMS[args.problem](n)
            t0 = time.perf_counter()
            _, st = integrate(prob, sch, args.steps, delta_policy=DeltaPolicy(args.c_exp))
            wall = time.perf_counter() - t0
            last = st.plans[-1] if st.plans else ("", -1, -1, -1)
            recs.append(RunRecord("bench", args.problem, args.scheme, last[0], n, prob.blocks[0].d,
                                  0, 0, 0, args.steps, math.nan, math.nan, wall, st.tucker_ops,
                                  st.tucker_ops_per_step, last[1], last[2], last[3]))
    return recs, dict(delta_c_exp=args.c_exp), True


# ---------------------------------------------------------------------------
# parser


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None,
                        help="BLAS threads (default: $PHIKS_THREADS or library default)")
    common.add_argument("--out", default=None, help="CSV output file (default stdout)")

    ap = _Parser(prog="kronphi", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", parents=[common], help="compare against the dense oracle")
    v.add_argument("--d", type=int, default=3)
    v.add_argument("--n", type=int, default=6)
    v.add_argument("--p", type=int, default=5)
    v.add_argument("--tol", type=_parse_tol, default=2.0 ** -53)
    v.add_argument("--mode", choices=("same", "lincomb"), default="same")
    v.add_argument("--s-hat", type=int, default=1)
    v.add_argument("--threshold", type=float, default=1e-11)
    v.add_argument("--random-vector", action="store_true")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("converge", parents=[common], help="convergence study")
    c.add_argument("--problem", choices=sorted(PROBLEMS), required=True)
    c.add_argument("--scheme", required=True)
    c.add_argument("--n", type=int, default=None)
    c.add_argument("--steps", type=_int_list, required=True)
    c.add_argument("--c-exp", type=int, default=0, help="delta constant 2^c_exp")
    c.add_argument("--ref-factor", type=int, default=8)
    c.add_argument("--force-reference", action="store_true")
    c.add_argument("--expect", type=float, default=None)
    c.add_argument("--slope-tol", type=float, default=0.15)
    c.set_defaults(func=cmd_converge)

    b = sub.add_parser("bench", parents=[common], help="timings and Tucker counts")
    b.add_argument("--problem", choices=sorted(PROBLEMS), required=True)
    b.add_argument("--scheme", required=True)
    b.add_argument("--n", type=_int_list, required=True)
    b.add_argument("--steps", type=int, default=20)
    b.add_argument("--c-exp", type=int, default=0)
    b.set_defaults(func=cmd_bench)
    return ap


def _threads(args):
    n = args.threads
    if n is None and os.environ.get("PHIKS_THREADS"):
        n = int(os.environ["PHIKS_THREADS"])
    if n is None:
        return None
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.command == "converge":
            get_scheme(args.scheme)
    except (UsageError, ValueError) as exc:
        print(f"kronphi: error: {exc}", file=sys.stderr)
        return 2
    limiter = _threads(args)
    try:
        recs, meta, ok = args.func(args)
    except UsageError as exc:
        print(f"kronphi: error: {exc}", file=sys.stderr)
        return 2
    finally:
        if limiter is not None:
            limiter.unregister()
    head = dict(command=args.command, git=_git_hash(), seed=args.seed,
                threads=args.threads or os.environ.get("PHIKS_THREADS", "default"))
    head.update(meta)
    head["status"] = "pass" if ok else "fail"
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_csv(fh, recs, head)
    else:
        write_csv(sys.stdout, recs, head)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
