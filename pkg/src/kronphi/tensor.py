"""Dense order-d tensors, mu-mode products and Tucker operators.

Tensors are plain :class:`numpy.ndarray` objects of shape ``(n_1, ..., n_d)``.
The linear ordering used by :func:`vec` is column-major (first index fastest),
so that ``vec(V x_1 M_1 ... x_d M_d) = (M_d kron ... kron M_1) vec(V)``.
Axes are numbered from 0 as usual in numpy.
"""
import numpy as np


class SizeError(ValueError):
    """Raised when operand dimensions do not conform."""


def vec(t):
    """Stack the entries of ``t`` in column-major order."""
    return np.asarray(t).reshape(-1, order="F")


def unvec(x, dims):
    """Inverse of :func:`vec` for a tensor of shape ``dims``."""
    x = np.asarray(x)
    dims = tuple(int(n) for n in dims)
    if x.ndim != 1 or x.size != int(np.prod(dims)):
        raise SizeError(f"vector of length {x.size} cannot be reshaped to {dims}")
    return x.reshape(dims, order="F")


def mu_mode_product(t, m, mu):
    """Contract matrix ``m`` against axis ``mu`` of tensor ``t``.

    ``result[..., j, ...] = sum_k m[j, k] * t[..., k, ...]``. The axis of the
    result has length ``m.shape[0]``. One GEMM of cost O(N n_mu).
    """
    t = np.asarray(t)
    m = np.asarray(m)
    if not 0 <= mu < t.ndim:
        raise SizeError(f"axis {mu} out of range for an order-{t.ndim} tensor")
    if m.ndim != 2 or m.shape[1] != t.shape[mu]:
        raise SizeError(
            f"axis {mu}: matrix with {m.shape[-1]} columns applied to "
            f"dimension {t.shape[mu]}"
        )
    if mu == 0:
        # contiguous in column-major layout: one GEMM on the unfolding
        rest = t.shape[1:]
        out = m @ t.reshape(t.shape[0], -1, order="F")
        return out.reshape((m.shape[0],) + rest, order="F")
    return np.moveaxis(np.tensordot(m, t, axes=([1], [mu])), 0, mu)


def tucker(t, mats):
    """Apply ``mats[mu]`` along every axis ``mu`` of ``t`` in turn."""
    t = np.asarray(t)
    if len(mats) != t.ndim:
        raise SizeError(f"{len(mats)} matrices given for an order-{t.ndim} tensor")
    for mu, m in enumerate(mats):
        t = mu_mode_product(t, m, mu)
    return t


def kron_matrix(mats):
    """Explicit ``mats[-1] kron ... kron mats[0]`` (small sizes only)."""
    out = np.ones((1, 1), dtype=np.result_type(*mats))
    for m in mats:
        out = np.kron(m, out)
    return out


def inf_norm(t):
    t = np.asarray(t)
    return float(np.max(np.abs(t))) if t.size else 0.0


def two_norm(t):
    return float(np.linalg.norm(np.asarray(t).ravel()))
