"""Exponential Runge-Kutta integrators driven by the phiks routines.

Every stage is ``u_ni = u_n + c_i tau phi_1(c_i tau K) f_n + tau sum_j a_ij d_nj``
with ``d_nj = g(t_n + c_j tau, u_nj) - g(t_n, u_n)``: the coefficients below are
the perturbations of exponential Euler. Block-diagonal problems issue one
phiks call per block.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .phi import phiks_lincomb, phiks_same_vector


@dataclass
class DeltaPolicy:
    """Quadrature tolerance per step.

    ``delta = 2**c_exp * tau**(order+1) * |u_n|_2`` unless ``fixed`` is set.
    """
    c_exp: int = 0
    fixed: float = None

    def __call__(self, tau, order, u):
        if self.fixed is not None:
            return self.fixed
        nrm = math.sqrt(sum(float(np.vdot(x, x).real) for x in u))
        return 2.0 ** self.c_exp * tau ** (order + 1) * (nrm if nrm > 0 else 1.0)


@dataclass
class StepStats:
    steps: int = 0
    calls: int = 0
    tucker_ops: int = 0
    plans: list = field(default_factory=list)

    def add(self, res):
        self.calls += 1
        self.tucker_ops += res.tucker_ops_used
        self.plans.append((res.plan.mode, res.plan.s, res.plan.q, res.plan.T_predicted))

    @property
    def tucker_ops_per_step(self):
        return self.tucker_ops / self.steps if self.steps else 0.0


class _Ops:
    """Per-step context: the tau-scaled operators and phiks wrappers."""

    def __init__(self, rhs, tau, delta, stats, cache=True):
        self.rhs = rhs
        self.tau = tau
        self.delta = delta
        self.stats = stats
        self.cache = cache
        self._scaled = {}

    def K(self, c):
        key = float(c)
        if key not in self._scaled:
            self._scaled[key] = tuple(k.with_time_factor(k.time_factor * c * self.tau)
                                      for k in self.rhs.blocks)
        return self._scaled[key]

    def same(self, c, vs, p, s_hat=0):
        out = []
        for k, v in zip(self.K(c), vs):
            r = phiks_same_vector(k, v, p, self.delta, s_hat=s_hat, cache=self.cache)
            self.stats.add(r)
            out.append(r)
        return out

    def lin(self, c, v0s, vss, s_hat=0):
        out = []
        for b, k in enumerate(self.K(c)):
            v0 = None if v0s is None else v0s[b]
            r = phiks_lincomb(k, v0, [None if x is None else x[b] for x in vss], self.delta,
                              s_hat=s_hat, cache=self.cache)
            self.stats.add(r)
            out.append(r)
        return out


def _scale(c, u):
    return tuple(c * x for x in u)


def _add(*terms):
    return tuple(sum(parts) for parts in zip(*terms))


def _diff(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _update(u, *terms):
    return tuple(x + sum(t[i] for t in terms) for i, x in enumerate(u))


# ---------------------------------------------------------------------------
# schemes


def exp_euler_step(ops, t, u, mode="same_vector"):
    rhs, tau = ops.rhs, ops.tau
    if mode == "same_vector":
        r = ops.same(1.0, _scale(tau, rhs.f(t, u)), 1)
        return _update(u, [x.phi(1) for x in r])
    r = ops.lin(1.0, u, [_scale(tau, rhs.g(t, u))])
    return tuple(x.combo() for x in r)


def etd2rk_step(ops, t, u, mode="lincomb"):
    rhs, tau = ops.rhs, ops.tau
    gn = rhs.g(t, u)
    if mode == "lincomb":
        u2 = tuple(x.combo() for x in ops.lin(1.0, u, [_scale(tau, gn)]))
        d2 = _diff(rhs.g(t + tau, u2), gn)
        r = ops.lin(1.0, u, [_scale(tau, gn), _scale(tau, d2)])
        return tuple(x.combo() for x in r)
    if mode != "same_vector":
        raise ValueError(f"unknown mode {mode!r}")
    fn = _add(rhs.linear(u), gn)
    u2 = _update(u, [x.phi(1) for x in ops.same(1.0, _scale(tau, fn), 1)])
    d2 = _diff(rhs.g(t + tau, u2), gn)
    r = ops.same(1.0, _scale(tau, d2), 2)
    return _update(u2, [x.phi(2) for x in r])


EXPRK3_C2 = 0.25
EXPRK3_C3 = 0.5
EXPRK3_GAMMA = (3 * EXPRK3_C3 - 2) * EXPRK3_C3 / ((2 - 3 * EXPRK3_C2) * EXPRK3_C2)


def exprk3_step(ops, t, u):
    """Three-stage stiff order three scheme with ``c3 = 2 c2 = 1/2``."""
    rhs, tau = ops.rhs, ops.tau
    c2, c3, gam = EXPRK3_C2, EXPRK3_C3, EXPRK3_GAMMA
    gn = rhs.g(t, u)
    fn = _add(rhs.linear(u), gn)
    # same-vector outputs are phi_l(tau K / 2^s) (tau v), s = 0, 1, 2
    rf = ops.same(1.0, _scale(tau, fn), 1, s_hat=2)
    u2 = _update(u, [c2 * x.phi(1, 2) for x in rf])
    d2 = _diff(rhs.g(t + c2 * tau, u2), gn)
    rd = ops.same(1.0, _scale(tau, d2), 2, s_hat=2)
    u3 = _update(u, [c3 * x.phi(1, 1) for x in rf],
                 [gam * c2 * x.phi(2, 2) + (c3 ** 2 / c2) * x.phi(2, 1) for x in rd])
    d3 = _diff(rhs.g(t + c3 * tau, u3), gn)
    w = tuple((gam * a + b) / (gam * c2 + c3) for a, b in zip(d2, d3))
    rw = ops.same(1.0, _scale(tau, w), 2)
    return _update(u, [x.phi(1, 0) for x in rf], [x.phi(2) for x in rw])


RK4S5_C = (0.0, 0.5, 0.5, 1.0, 0.5)


def exprk4_5stage_step(ops, t, u, assembly="smart"):
    """Five-stage stiff order four scheme; ``smart`` or ``literal`` stage assembly."""
    rhs, tau = ops.rhs, ops.tau
    gn = rhs.g(t, u)
    fn = _add(rhs.linear(u), gn)
    rf = ops.same(1.0, _scale(tau, fn), 1, s_hat=1)
    # tau/2 phi_1(tau K/2) f = phi_1(tau K/2) (tau f) / 2
    half_f = [0.5 * x.phi(1, 1) for x in rf]
    full_f = [x.phi(1, 0) for x in rf]
    u2 = _update(u, half_f)
    d2 = _diff(rhs.g(t + 0.5 * tau, u2), gn)
    p3 = 2 if assembly == "smart" else 3
    r2 = ops.same(1.0, _scale(tau, d2), p3, s_hat=1)
    u3 = _update(u, half_f, [x.phi(2, 1) for x in r2])
    d3 = _diff(rhs.g(t + 0.5 * tau, u3), gn)
    r3 = ops.same(1.0, _scale(tau, d3), p3, s_hat=1)
    u4 = _update(u, full_f, [a.phi(2, 0) + b.phi(2, 0) for a, b in zip(r2, r3)])
    d4 = _diff(rhs.g(t + tau, u4), gn)
    if assembly == "smart":
        big_d = _diff(_add(d2, d3), d4)
        # Q_s = phi_2(tau K/2^s) d4 / 4^s + phi_3(tau K/2^s) 4 D / 8^s
        rq = ops.lin(1.0, None, [None, _scale(tau, d4), _scale(4 * tau, big_d)], s_hat=1)
        terms = [0.5 * (a.phi(2, 1) + b.phi(2, 1)) + 0.25 * (a.phi(2, 0) + b.phi(2, 0))
                 - q.combo(1) - 0.25 * q.combo(0) for a, b, q in zip(r2, r3, rq)]
        u5 = _update(u, half_f, terms)
    elif assembly == "literal":
        r4 = ops.same(1.0, _scale(tau, d4), 3, s_hat=1)

        def a52(r):
            return (0.5 * r.phi(2, 1) - r.phi(3, 0) + 0.25 * r.phi(2, 0) - 0.5 * r.phi(3, 1))

        terms = [a52(a) + a52(b) + 0.25 * c.phi(2, 1) - a52(c) for a, b, c in zip(r2, r3, r4)]
        u5 = _update(u, half_f, terms)
    else:
        raise ValueError(f"unknown assembly {assembly!r}")
    d5 = _diff(rhs.g(t + 0.5 * tau, u5), gn)
    if assembly == "smart":
        rfin = ops.lin(1.0, None, [None, _scale(tau, _diff(_scale(4, d5), d4)),
                                   _scale(tau, _diff(_scale(4, d4), _scale(8, d5)))])
        return _update(u, full_f, [x.combo() for x in rfin])
    r5 = ops.same(1.0, _scale(tau, d5), 3)
    # r4 holds phi_l(tau K) (tau d4) at scale 0
    return _update(u, full_f, [-a.phi(2, 0) + 4 * a.phi(3, 0) + 4 * b.phi(2) - 8 * b.phi(3)
                               for a, b in zip(r4, r5)])


RK4S6_C = (0.0, 1 / 3, 1 / 3, 2 / 3, 0.5, 1.0)


def exprk4_6stage_step(ops, t, u):
    """Six-stage stiff order four scheme evaluated in three stage pairs."""
    rhs, tau = ops.rhs, ops.tau
    _, c2, c3, c4, c5, c6 = RK4S6_C
    gn = rhs.g(t, u)
    u2 = tuple(x.combo() for x in ops.lin(c2, u, [_scale(c2 * tau, gn)]))
    d2 = _diff(rhs.g(t + c2 * tau, u2), gn)
    # stage 4 at scale 0 and stage 3 (c3 = c4/2) at scale 1
    r34 = ops.lin(c4, u, [_scale(c4 * tau, gn), _scale(c4 ** 2 * tau / c2, d2)], s_hat=1)
    u3 = tuple(x.combo(1) for x in r34)
    u4 = tuple(x.combo(0) for x in r34)
    d3 = _diff(rhs.g(t + c3 * tau, u3), gn)
    d4 = _diff(rhs.g(t + c4 * tau, u4), gn)
    al3 = c4 / (c3 * (c4 - c3))
    be3 = 2 / (c3 * (c3 - c4))
    al4 = c3 / (c4 * (c3 - c4))
    be4 = 2 / (c4 * (c4 - c3))
    v2 = tuple(tau * (al3 * a + al4 * b) for a, b in zip(d3, d4))
    v3 = tuple(tau * (be3 * a + be4 * b) for a, b in zip(d3, d4))
    # c6 = 1 at scale 0, c5 = 1/2 at scale 1
    r56 = ops.lin(1.0, u, [_scale(tau, gn), v2, v3], s_hat=1)
    u5 = tuple(x.combo(1) for x in r56)
    u6 = tuple(x.combo(0) for x in r56)
    d5 = _diff(rhs.g(t + c5 * tau, u5), gn)
    d6 = _diff(rhs.g(t + c6 * tau, u6), gn)
    w2 = tuple(tau * (c6 / (c5 * (c6 - c5)) * a + c5 / (c6 * (c5 - c6)) * b) for a, b in zip(d5, d6))
    w3 = tuple(tau * (2 / (c5 * (c5 - c6)) * a + 2 / (c6 * (c6 - c5)) * b) for a, b in zip(d5, d6))
    rfin = ops.lin(1.0, u, [_scale(tau, gn), w2, w3])
    return tuple(x.combo() for x in rfin)


# ---------------------------------------------------------------------------
# driver


@dataclass(frozen=True)
class Scheme:
    name: str
    order: int
    step: object
    kwargs: tuple = ()


SCHEMES = {
    "euler": Scheme("euler", 1, exp_euler_step),
    "euler_lincomb": Scheme("euler_lincomb", 1, exp_euler_step, (("mode", "lincomb"),)),
    "etd2rk": Scheme("etd2rk", 2, etd2rk_step),
    "etd2rk_same": Scheme("etd2rk_same", 2, etd2rk_step, (("mode", "same_vector"),)),
    "rk3": Scheme("rk3", 3, exprk3_step),
    "rk4s5": Scheme("rk4s5", 4, exprk4_5stage_step),
    "rk4s5_literal": Scheme("rk4s5_literal", 4, exprk4_5stage_step, (("assembly", "literal"),)),
    "rk4s6": Scheme("rk4s6", 4, exprk4_6stage_step),
}


def get_scheme(name):
    try:
        return SCHEMES[name]
    except KeyError:
        raise ValueError(f"unknown scheme {name!r}; choose from {sorted(SCHEMES)}") from None


def integrate(rhs, scheme, n_steps, T=None, delta_policy=None, u0=None, cache=True):
    """Constant-step integration from 0 to ``T``; returns ``(u_T, stats)``."""
    sch = get_scheme(scheme) if isinstance(scheme, str) else scheme
    T = rhs.T if T is None else T
    policy = DeltaPolicy() if delta_policy is None else delta_policy
    u = tuple(np.asarray(x, dtype=complex) for x in (rhs.u0 if u0 is None else u0))
    stats = StepStats()
    if n_steps == 0:
        return u, stats
    tau = T / n_steps
    kwargs = dict(sch.kwargs)
    ops = _Ops(rhs, tau, 0.0, stats, cache=cache)
    for n in range(n_steps):
        ops.delta = policy(tau, sch.order, u)
        u = sch.step(ops, n * tau, u, **kwargs)
        stats.steps += 1
    return u, stats
