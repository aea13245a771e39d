"""Small dense matrix services used on the Kronecker factors."""
from dataclasses import dataclass

import numpy as np
import scipy.linalg


def _square(a):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"square matrix required, got shape {a.shape}")
    return a


def expm(a):
    """Matrix exponential (degree-13 Pade with scaling and squaring)."""
    return scipy.linalg.expm(_square(a))


def trace_shift(a):
    """Average eigenvalue trace(a)/n; minimizes the Frobenius norm of a - sigma*I."""
    a = _square(a)
    return complex(np.trace(a)) / a.shape[0]


def herm_skew_split(a):
    """Return (H, S) with H Hermitian, S skew-Hermitian and a = H + S."""
    a = _square(a)
    ah = a.conj().T
    return (a + ah) / 2, (a - ah) / 2


def two_norm_estimate(a, maxiter=100, inflate=1.01):
    """Cheap upper estimate of the spectral norm of ``a``.

    Power iteration on a^* a from a deterministic start, inflated by
    ``inflate`` and never larger than the bound sqrt(|a|_1 |a|_inf).
    """
    a = _square(a)
    n = a.shape[0]
    cap = np.sqrt(np.linalg.norm(a, 1) * np.linalg.norm(a, np.inf))
    if cap == 0.0:
        return 0.0
    # alternating-sign start avoids orthogonality to the dominant vector of
    # the typical FD matrices (constant and checkerboard modes)
    x = 1.0 + 0.5 * np.cos(np.arange(n) * 1.3) + 0.1j * np.sin(np.arange(n))
    x /= np.linalg.norm(x)
    sigma = 0.0
    converged = False
    for _ in range(maxiter):
        y = a.conj().T @ (a @ x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            converged = True
            break
        new = np.sqrt(ny)
        x = y / ny
        if abs(new - sigma) <= 1e-10 * new:
            sigma = new
            converged = True
            break
        sigma = new
    if not converged:
        # clustered top singular values stall the iteration below the true
        # norm; the estimate feeds an error bound, so take the exact value
        sigma = float(np.linalg.norm(a, 2))
    return float(min(inflate * sigma, cap))


@dataclass(frozen=True)
class ShiftInfo:
    sigma_mu: tuple

    @property
    def sigma(self):
        return complex(sum(self.sigma_mu))

    @classmethod
    def from_factors(cls, factors):
        return cls(tuple(trace_shift(a) for a in factors))
