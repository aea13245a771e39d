"""Dense reference computations on the assembled matrix, for desk-scale checks."""
import math

import numpy as np
import scipy.linalg

from .tensor import kron_matrix, unvec, vec

MAX_DENSE = 600


class OracleSizeError(ValueError):
    pass


def _cap(n):
    if n > MAX_DENSE:
        raise OracleSizeError(f"dense oracle limited to dimension {MAX_DENSE}, got {n}")


def assemble(k):
    """The N x N matrix ``t * sum_mu I (x) .. (x) A_mu (x) .. (x) I`` (vec order)."""
    dims = k.dims
    _cap(math.prod(dims))
    out = 0
    for mu, a in enumerate(k.factors):
        mats = [np.eye(n) for n in dims]
        mats[mu] = a
        out = out + kron_matrix(mats)
    return k.time_factor * np.asarray(out, dtype=complex)


def _augmented(a, cols):
    """exp([[a, cols, 0], [0, J]]) where J shifts identity up by one."""
    n = a.shape[0]
    p = cols.shape[1]
    _cap(n + p)
    m = np.zeros((n + p, n + p), dtype=complex)
    m[:n, :n] = a
    m[:n, n:] = cols
    m[n:, n:] = np.eye(p, k=1)
    return scipy.linalg.expm(m)


def phi_dense(a, ell):
    """Dense ``phi_ell(a)``; ``ell = 0`` is the exponential."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if ell == 0:
        _cap(n)
        return scipy.linalg.expm(a)
    _cap(n + ell)
    # block chain [[a, I, 0], [0, 0, I], [0, 0, 0]]: the last top block is phi_ell(a)
    big = np.zeros((n * (ell + 1), n * (ell + 1)), dtype=complex)
    big[:n, :n] = a
    for i in range(ell):
        big[i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n] = np.eye(n)
    e = scipy.linalg.expm(big)
    return e[:n, ell * n:]


def phi_taylor(a, ell, terms=60):
    """``sum_k (a/2^s)^k/(k+ell)!`` lifted by the squaring recurrence; independent check."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    nrm = np.linalg.norm(a, 1)
    s = max(0, int(math.ceil(math.log2(nrm))) + 1) if nrm > 0 else 0
    x = a / 2.0 ** s
    eye = np.eye(n, dtype=complex)
    fam = []
    for l in range(ell + 1):
        acc = np.zeros_like(x)
        term = eye.copy()
        for kk in range(terms):
            acc += term / math.factorial(kk + l)
            term = term @ x
        fam.append(acc)
    for _ in range(s):
        e = fam[0]
        new = [e @ e]
        for l in range(1, ell + 1):
            acc = e @ fam[l]
            for kk in range(1, l + 1):
                acc = acc + fam[kk] / math.factorial(l - kk)
            new.append(acc / 2.0 ** l)
        fam = new
    return fam[ell]


def phi_actions_dense(a, v, p):
    """``[phi_1(a) v, .., phi_p(a) v]`` from one exponential of size N + p."""
    a = np.asarray(a, dtype=complex)
    v = np.asarray(v, dtype=complex)
    cols = np.zeros((a.shape[0], p), dtype=complex)
    cols[:, 0] = v
    e = _augmented(a, cols)
    n = a.shape[0]
    return [e[:n, n + l] for l in range(p)]


def lincomb_dense(a, v0, vs):
    """``exp(a) v0 + sum_l phi_l(a) v_l`` by one augmented exponential."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    p = len(vs)
    v0 = np.zeros(n, dtype=complex) if v0 is None else np.asarray(v0, dtype=complex)
    if p == 0:
        _cap(n)
        return scipy.linalg.expm(a) @ v0
    # columns v_p, .., v_1 and start vector e_p: the first N rows give the combination
    cols = np.stack([np.asarray(x, dtype=complex) for x in vs[::-1]], axis=1)
    e = _augmented(a, cols)
    start = np.zeros(n + p, dtype=complex)
    start[:n] = v0
    start[-1] = 1.0
    return (e @ start)[:n]


def tensor_phi_actions(k, v, p, j=0):
    """Oracle family ``phi_l(K/2^j) v`` for tensors, ``l = 1..p``."""
    a = assemble(k) / 2.0 ** j
    return [unvec(x, k.dims) for x in phi_actions_dense(a, vec(v), p)]


def tensor_lincomb(k, v0, vs, j=0):
    """Oracle for the combination returned by ``phiks_lincomb`` at scale ``j``."""
    a = assemble(k) / 2.0 ** j
    vv = [vec(x) / 2.0 ** (l * j) for l, x in enumerate(vs, start=1)]
    return unvec(lincomb_dense(a, None if v0 is None else vec(v0), vv), k.dims)
