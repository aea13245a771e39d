"""Actions of phi-functions of Kronecker sums by quadrature and modified squaring.

For ``X = K / 2**s`` the quadrature

    phi_l(X) v ~ sum_i w_i theta_i**(l-1)/(l-1)! exp((1 - theta_i) X) v

needs one Tucker operator per node, because ``exp`` of a Kronecker sum is the
Kronecker product of the factor exponentials. The squaring recurrence

    phi_l(2X) = 2**-l (exp(X) phi_l(X) + sum_{k<=l} phi_k(X)/(l-k)!)

then lifts the family back to ``K``. The intermediate levels are the same
family at the dyadic fractions ``K / 2**j``.
"""
from collections import OrderedDict
from dataclasses import dataclass, field
from functools import cached_property
import hashlib
import math

import numpy as np

from .dense import expm, trace_shift
from .quadrature import (DEFAULT_CONFIG, QuadraturePlan, gll_rule, range_rectangle,
                         select_plan, tucker_count)
from .tensor import SizeError, tucker, two_norm


@dataclass(frozen=True, eq=False)
class KroneckerSum:
    """``time_factor * (A_d (+) ... (+) A_1)``, kept as its factors.

    ``factors[mu]`` acts on axis ``mu`` of the state tensor.
    """
    factors: tuple
    time_factor: complex = 1.0
    shift: bool = False

    def __post_init__(self):
        fs = tuple(np.asarray(a, dtype=complex) for a in self.factors)
        if not fs:
            raise ValueError("a Kronecker sum needs at least one factor")
        for mu, a in enumerate(fs):
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise SizeError(f"factor {mu} is not square: shape {a.shape}")
            a.setflags(write=False)
        object.__setattr__(self, "factors", fs)
        object.__setattr__(self, "time_factor", complex(self.time_factor))

    @property
    def dims(self):
        return tuple(a.shape[0] for a in self.factors)

    @property
    def d(self):
        return len(self.factors)

    @property
    def size(self):
        return math.prod(self.dims)

    @cached_property
    def scaled_factors(self):
        """The factors multiplied by the time factor."""
        return tuple(self.time_factor * a for a in self.factors)

    @cached_property
    def sigma_mu(self):
        if not self.shift:
            return (0.0,) * self.d
        return tuple(trace_shift(a) for a in self.scaled_factors)

    @cached_property
    def key(self):
        h = hashlib.sha1()
        for a in self.scaled_factors:
            h.update(str(a.shape).encode())
            h.update(np.ascontiguousarray(a).tobytes())
        h.update(b"shift" if self.shift else b"plain")
        return h.hexdigest()

    def with_time_factor(self, t):
        return KroneckerSum(self.factors, t, self.shift)

    def apply(self, v):
        """``K v`` through mode products (used by problem right-hand sides)."""
        v = _check_tensor(v, self.dims)
        out = np.zeros(v.shape, dtype=np.result_type(v, complex))
        for mu, a in enumerate(self.scaled_factors):
            out += np.moveaxis(np.tensordot(a, v, axes=(1, mu)), 0, mu)
        return out


@dataclass
class PhiSameVectorResult:
    """``phis[j][l-1] = phi_l(K/2**j) v`` for ``j = 0..s_hat``."""
    phis: list
    exp_actions: dict
    plan: QuadraturePlan
    tucker_ops_used: int

    def phi(self, ell, j=0):
        return self.phis[j][ell - 1]

    def exp(self, j):
        return self.exp_actions[j]


@dataclass
class PhiCombinationResult:
    """``combos[j] = exp(K/2**j) v0 + sum_l phi_l(K/2**j) v_l / 2**(l j)``."""
    combos: list
    partials: list = field(repr=False)
    plan: QuadraturePlan
    tucker_ops_used: int

    def combo(self, j=0):
        return self.combos[j]


def _check_tensor(v, dims):
    v = np.asarray(v)
    if v.shape != tuple(dims):
        if v.ndim == 1 and v.size == math.prod(dims):
            raise SizeError(f"expected a tensor of shape {tuple(dims)}; use unvec on flat vectors")
        raise SizeError(f"tensor shape {v.shape} does not match operator dims {tuple(dims)}")
    return v


# ---------------------------------------------------------------------------
# factor exponentials, cached per operator and plan


class _ExpCache:
    def __init__(self, maxsize=64):
        self.maxsize = maxsize
        self._data = OrderedDict()
        self.hits = 0
        self.misses = 0

    def get(self, key, build):
        if key in self._data:
            self._data.move_to_end(key)
            self.hits += 1
            return self._data[key]
        self.misses += 1
        val = build()
        self._data[key] = val
        if len(self._data) > self.maxsize:
            self._data.popitem(last=False)
        return val

    def clear(self):
        self._data.clear()
        self.hits = self.misses = 0


EXP_CACHE = _ExpCache()
_RECT_CACHE = _ExpCache(maxsize=256)


@dataclass
class _Exponentials:
    nodes: list      # per node: (list of factor matrices or None for theta=1, scalar)
    powers: list     # powers[j] = (factors of exp(K/2**j), scalar), j = 0..s


def _exponentials(k, s, rule):
    sig = k.sigma_mu
    sigma = complex(sum(sig))
    base = [a - sm * np.eye(a.shape[0]) if sm else a
            for a, sm in zip(k.scaled_factors, sig)]
    scale = 2.0 ** -s
    nodes = []
    for th in rule.nodes:
        if th == 1.0:
            nodes.append((None, 1.0))
            continue
        c = (1.0 - th) * scale
        nodes.append(([expm(c * b) for b in base], np.exp(c * sigma)))
    # theta_1 = 0 gives exp(B/2**s) directly
    powers = [None] * (s + 1)
    powers[s] = nodes[0]
    for j in range(s, 0, -1):
        mats, c = powers[j]
        powers[j - 1] = ([m @ m for m in mats], c * c)
    return _Exponentials(nodes, powers)


def _get_exponentials(k, s, rule, cache):
    if not cache:
        return _exponentials(k, s, rule)
    return EXP_CACHE.get((k.key, s, rule.q), lambda: _exponentials(k, s, rule))


def _rectangle(k, cache):
    if not cache:
        return range_rectangle(k.scaled_factors)
    return _RECT_CACHE.get(k.key, lambda: range_rectangle(k.scaled_factors))


def _apply(mats_scalar, v):
    mats, c = mats_scalar
    if mats is None:
        return c * v
    out = tucker(v, mats)
    return out if c == 1.0 else c * out


def _plan(k, mode, p, norms, delta, s_hat, config, s_min, cache):
    rect = _rectangle(k, cache)
    return select_plan(mode, rect, p, norms, delta, s_hat=s_hat, config=config, s_min=s_min)


# ---------------------------------------------------------------------------
# same vector


def phiks_same_vector(k, v, p, delta, s_hat=0, exp_scales=(), plan=None,
                      config=DEFAULT_CONFIG, s_min=None, cache=True):
    """``phi_l(K/2**j) v`` for ``l = 1..p`` and ``j = 0..s_hat``.

    ``exp_scales`` lists the ``j`` for which ``exp(K/2**j) v`` is also wanted;
    each costs one Tucker operator except ``j = s`` which the quadrature
    produces anyway. ``plan`` overrides the automatic choice of (s, q).
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    v = _check_tensor(v, k.dims).astype(complex, copy=False)
    exp_scales = sorted(set(int(j) for j in exp_scales))
    if any(j < 0 or j > s_hat for j in exp_scales):
        raise ValueError("exp_scales must lie in 0..s_hat")
    if plan is None:
        plan = _plan(k, "same_vector", p, [two_norm(v)], delta, s_hat, config, s_min, cache)
    s, rule = plan.s, plan.rule
    if s < s_hat:
        raise ValueError("plan scaling is smaller than the number of requested scales")
    ex = _get_exponentials(k, s, rule, cache)
    ops = 0

    fact = [math.factorial(l) for l in range(p + 1)]
    phis = [np.zeros_like(v) for _ in range(p)]
    exp_s = None
    for th, w, node in zip(rule.nodes, rule.weights, ex.nodes):
        y = _apply(node, v)
        if node[0] is not None:
            ops += 1
        if th == 0.0:
            exp_s = y
        for l in range(1, p + 1):
            c = w * th ** (l - 1) / fact[l - 1]
            if c != 0.0:
                phis[l - 1] += c * y

    families = {}
    exps = {}
    if s <= s_hat:
        families[s] = [f.copy() for f in phis]
    if s in exp_scales:
        exps[s] = exp_s
    for j in range(s, 0, -1):
        e = ex.powers[j]
        old = phis
        new = [None] * p
        for l in range(p, 0, -1):
            acc = _apply(e, old[l - 1])
            ops += 1
            for kk in range(1, l + 1):
                acc += old[kk - 1] / fact[l - kk]
            new[l - 1] = acc * 2.0 ** -l
        phis = new
        lev = j - 1
        if lev <= s_hat:
            families[lev] = phis
        if lev in exp_scales:
            exps[lev] = _apply(ex.powers[lev], v)
            ops += 1
    out = [families[j] for j in range(s_hat + 1)]
    return PhiSameVectorResult(out, exps, plan, ops)


# ---------------------------------------------------------------------------
# linear combinations


def phiks_lincomb(k, v0, vs, delta, s_hat=0, plan=None, config=DEFAULT_CONFIG,
                  s_min=None, cache=True):
    """``exp(K/2**j) v0 + sum_l phi_l(K/2**j) v_l / 2**(l j)`` for ``j = 0..s_hat``.

    ``v0`` may be None. Entries of ``vs`` may be None for zero vectors; the
    Tucker operators they would feed are skipped.
    """
    dims = k.dims
    vs = list(vs)
    p = len(vs)
    vs = [None if x is None else _check_tensor(x, dims).astype(complex, copy=False) for x in vs]
    if v0 is not None:
        v0 = _check_tensor(v0, dims).astype(complex, copy=False)
    zero = np.zeros(dims, dtype=complex)
    if p == 0:
        if v0 is None:
            raise ValueError("nothing to compute: no v0 and no phi vectors")
        return _pure_exp(k, v0, s_hat, cache)
    vs = [zero if x is None else x for x in vs]
    if plan is None:
        norms = [two_norm(x) for x in vs]
        if max(norms) == 0.0:
            norms = [1.0] * p
        plan = _plan(k, "lincomb", p, norms, delta, s_hat, config, s_min, cache)
    s, rule = plan.s, plan.rule
    if s < s_hat:
        raise ValueError("plan scaling is smaller than the number of requested scales")
    ex = _get_exponentials(k, s, rule, cache)
    ops = 0

    fact = [math.factorial(l) for l in range(p + 1)]
    nonzero = [bool(np.any(x)) for x in vs]
    # scaled[k-1] = v_{p+1-k} / 2**((l-k+1) s) needs l; keep v_{p+1-k} and apply the power below
    parts = [np.zeros(dims, dtype=complex) for _ in range(p)]
    for th, w, node in zip(rule.nodes, rule.weights, ex.nodes):
        for l in range(1, p + 1):
            comb = None
            for kk in range(1, l + 1):
                idx = p - kk  # v_{p+1-k}, zero based
                c = th ** (l - kk) / fact[l - kk] * 2.0 ** (-(l - kk + 1) * s)
                if c == 0.0 or not nonzero[idx]:
                    continue
                comb = c * vs[idx] if comb is None else comb + c * vs[idx]
            if comb is None:
                continue
            y = _apply(node, comb)
            if node[0] is not None:
                ops += 1
            parts[l - 1] += w * y

    combos = {}
    partials = {}

    def record(j):
        partials[j] = [x.copy() for x in parts]
        combos[j] = parts[p - 1].copy()

    if s <= s_hat:
        record(s)
    for j in range(s, 0, -1):
        e = ex.powers[j]
        old = parts
        new = [None] * p
        for l in range(p, 0, -1):
            if not np.any(old[l - 1]):
                acc = np.zeros(dims, dtype=complex)
            else:
                acc = _apply(e, old[l - 1])
                ops += 1
            for kk in range(1, l + 1):
                acc += old[kk - 1] / (fact[l - kk] * 2.0 ** ((l - kk) * j))
            new[l - 1] = acc
        parts = new
        if j - 1 <= s_hat:
            record(j - 1)
    if v0 is not None:
        for j in range(s_hat + 1):
            combos[j] = combos[j] + _apply(ex.powers[j], v0)
            ops += 1
    return PhiCombinationResult([combos[j] for j in range(s_hat + 1)],
                                [partials[j] for j in range(s_hat + 1)], plan, ops)


def _pure_exp(k, v0, s_hat, cache):
    rule = gll_rule(2)
    ex = _get_exponentials(k, s_hat, rule, cache)
    combos = [_apply(ex.powers[j], v0) for j in range(s_hat + 1)]
    plan = QuadraturePlan("lincomb", s_hat, 2, rule, s_hat, 0,
                          tucker_count("lincomb", s_hat, s_hat, 2, 0), 0.0)
    return PhiCombinationResult(combos, [[] for _ in combos], plan, len(combos))


def block_diagonal_apply(blocks, mode, **kwargs):
    """Run one phiks routine independently on each diagonal block.

    ``blocks`` is a list of ``(KroneckerSum, args)`` where ``args`` are the
    positional tensor arguments (``(v,)`` for same_vector, ``(v0, vs)`` for
    lincomb); keyword arguments are shared.
    """
    fn = {"same_vector": phiks_same_vector, "lincomb": phiks_lincomb}[mode]
    out = []
    for k, args in blocks:
        if mode == "same_vector":
            (v,) = args
            out.append(fn(k, v, **kwargs))
        else:
            v0, vs = args
            out.append(fn(k, v0, vs, **kwargs))
    return out
