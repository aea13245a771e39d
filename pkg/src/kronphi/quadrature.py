"""Gauss-Lobatto-Legendre quadrature on [0, 1] and the choice of (s, q).

The remainder of the quadrature applied to
``f_l(theta, X) = theta**(l-1)/(l-1)! * exp((1-theta) X)`` is written as a
contour integral of ``k_q(z) f_l(z, X)`` over an ellipse with foci 0 and 1.
Its 2-norm is bounded by (1 + sqrt 2) times the supremum of the scalar version
over a rectangle enclosing the numerical range, evaluated on the rectangle
boundary. The bound drives the search for the scaling ``s`` and node count
``q`` that minimize the number of Tucker operators.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np
import scipy.integrate

from .dense import herm_skew_split, trace_shift, two_norm_estimate

SPECTRAL_SET_CONSTANT = 1.0 + math.sqrt(2.0)


class PlanError(RuntimeError):
    """No admissible (s, q) pair was found."""


@dataclass(frozen=True)
class GLLRule:
    q: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, f):
        return np.sum(self.weights * f(self.nodes))


@dataclass(frozen=True)
class RangeRectangle:
    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float

    def __post_init__(self):
        if self.re_lo > self.re_hi or self.im_lo > self.im_hi:
            raise ValueError("empty rectangle")

    def __add__(self, other):
        return RangeRectangle(self.re_lo + other.re_lo, self.re_hi + other.re_hi,
                              self.im_lo + other.im_lo, self.im_hi + other.im_hi)

    def scaled(self, c):
        """Image under multiplication by a positive real ``c``."""
        return RangeRectangle(c * self.re_lo, c * self.re_hi, c * self.im_lo, c * self.im_hi)

    def shifted(self, z):
        z = complex(z)
        return RangeRectangle(self.re_lo + z.real, self.re_hi + z.real,
                              self.im_lo + z.imag, self.im_hi + z.imag)

    def contains(self, z, tol=0.0):
        z = np.asarray(z)
        return bool(np.all((z.real >= self.re_lo - tol) & (z.real <= self.re_hi + tol)
                           & (z.imag >= self.im_lo - tol) & (z.imag <= self.im_hi + tol)))

    def boundary(self, n_side):
        """``4*n_side`` points walking the boundary counterclockwise, corners included."""
        corners = [complex(self.re_lo, self.im_lo), complex(self.re_hi, self.im_lo),
                   complex(self.re_hi, self.im_hi), complex(self.re_lo, self.im_hi)]
        t = np.arange(n_side) / n_side
        sides = [a + (b - a) * t for a, b in zip(corners, corners[1:] + corners[:1])]
        return np.concatenate(sides)

    def astuple(self):
        return (self.re_lo, self.re_hi, self.im_lo, self.im_hi)


@dataclass(frozen=True)
class Ellipse:
    """Ellipse with foci 0 and 1 and logarithmic capacity ``r > 1/4``."""
    r: float

    def __post_init__(self):
        if not self.r > 0.25:
            raise ValueError("capacity must exceed 1/4")

    def points(self, n):
        zeta = 2 * np.pi * np.arange(n) / n
        e = np.exp(1j * zeta)
        z = self.r * e + 0.5 + 1.0 / (16 * self.r * e)
        # dz = i * dzdz_factor * dzeta; the i cancels against 1/(2 pi i)
        dfac = self.r * e - 1.0 / (16 * self.r * e)
        return z, dfac


@dataclass(frozen=True)
class BoundConfig:
    r_grid: tuple = (0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0)
    n_zeta: int = 256
    n_boundary: int = 32
    q_min: int = 2
    q_max: int = 12
    s_max: int = 60


DEFAULT_CONFIG = BoundConfig()


@dataclass
class QuadraturePlan:
    mode: str
    s: int
    q: int
    rule: GLLRule = field(repr=False)
    s_hat: int
    p: int
    T_predicted: int
    delta: float


# ---------------------------------------------------------------------------
# GLL rule


@lru_cache(maxsize=None)
def _gll(q):
    if q < 2:
        raise ValueError("a Lobatto rule needs at least two nodes")
    n = q - 1
    x = np.cos(np.pi * np.arange(q) / n)
    P = np.zeros((q, q))
    for it in range(100):
        P[:, 0] = 1.0
        P[:, 1] = x
        for k in range(1, n):
            P[:, k + 1] = ((2 * k + 1) * x * P[:, k] - k * P[:, k - 1]) / (k + 1)
        dx = (x * P[:, n] - P[:, n - 1]) / (q * P[:, n])
        x = x - dx
        if np.max(np.abs(dx)) <= 2.3e-16:
            break
    else:
        raise RuntimeError(f"Lobatto node iteration did not converge for q={q}")
    for k in range(1, n):
        P[:, k + 1] = ((2 * k + 1) * x * P[:, k] - k * P[:, k - 1]) / (k + 1)
    w = 2.0 / (n * q * P[:, n] ** 2)
    order = np.argsort(x)
    x, w = x[order], w[order]
    theta = (1.0 + x) / 2
    theta[0], theta[-1] = 0.0, 1.0
    if q % 2 == 1:
        theta[q // 2] = 0.5
    theta.setflags(write=False)
    w = w / 2
    w.setflags(write=False)
    return theta, w


def gll_rule(q):
    """Gauss-Lobatto-Legendre rule with ``q`` nodes on [0, 1]."""
    theta, w = _gll(int(q))
    return GLLRule(int(q), theta, w)


# ---------------------------------------------------------------------------
# kernel k_q(z) = int_0^1 pi_q(t) / (pi_q(z) (z - t)) dt
#
# pi_q(t) = -t (1 - t) p_{q-2}(t), with p_k the monic orthogonal polynomials for
# the weight t(1-t) on [0, 1] (shifted Jacobi(1,1)).  The numerator is then
# -rho_{q-2}(z), rho_k(z) = int t(1-t) p_k(t)/(z-t) dt, the minimal solution of
# the three-term recurrence, computed by backward (Miller) recurrence.


def _rec_b(k):
    k = np.asarray(k, dtype=float)
    return np.where(k == 0, 1.0 / 6.0, k * (k + 2) / (4 * (2 * k + 1) * (2 * k + 3)))


def _rho0(z):
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    far = np.abs(z) > 4
    zn = z[~far]
    out[~far] = (zn - zn * zn) * np.log(zn / (zn - 1)) + zn - 0.5
    zf = z[far]
    # moments of t(1-t): 1/((k+2)(k+3))
    acc = np.zeros_like(zf)
    for k in range(60, -1, -1):
        acc = acc / zf + 1.0 / ((k + 2) * (k + 3))
    out[far] = acc / zf
    return out


def _joukowski_modulus(z):
    u = 2 * np.asarray(z, dtype=complex) - 1
    w = u + np.sqrt(u - 1) * np.sqrt(u + 1)
    return np.maximum(np.abs(w), 1.0 / np.maximum(np.abs(w), 1e-300))


def _rho_table(z, kmax):
    """rho_k(z) for k = 0..kmax, shape (kmax+1,) + z.shape."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    rate = 2 * np.log10(np.min(_joukowski_modulus(z)))
    extra = int(math.ceil(36.0 / max(rate, 1e-12))) + 10
    if extra > 20000:
        raise ValueError("point too close to [0, 1] for the backward recurrence")
    m = kmax + extra
    rho = np.zeros((kmax + 1,) + z.shape, dtype=complex)
    nxt = np.zeros_like(z)
    cur = np.ones_like(z)
    idx = np.arange(m + 1)
    b = _rec_b(idx)
    for k in range(m, 0, -1):
        if k <= kmax:
            rho[k] = cur
        prev = ((z - 0.5) * cur - nxt) / b[k]
        nxt, cur = cur, prev
        big = np.abs(cur) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            cur, nxt, rho = cur * scale, nxt * scale, rho * scale
    rho[0] = cur
    return rho * (_rho0(z) / cur)


def _numerator_quad(q, z):
    theta, _ = _gll(q)

    def pi_q(t):
        return np.prod(t - theta)

    vals = []
    for zz in np.atleast_1d(z):
        re = scipy.integrate.quad(lambda t: (pi_q(t) / (zz - t)).real, 0, 1, limit=400,
                                  epsabs=0, epsrel=1e-12)[0]
        im = scipy.integrate.quad(lambda t: (pi_q(t) / (zz - t)).imag, 0, 1, limit=400,
                                  epsabs=0, epsrel=1e-12)[0]
        vals.append(re + 1j * im)
    return np.array(vals)


def _nodal(q, z):
    theta, _ = _gll(q)
    z = np.asarray(z, dtype=complex)
    return np.prod(z[..., None] - theta, axis=-1)


def kernel_eval(rule, z):
    """Quadrature kernel ``k_q(z)`` of ``rule`` at points ``z`` off [0, 1]."""
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z1 = np.atleast_1d(z)
    dist = np.where((z1.real >= 0) & (z1.real <= 1), np.abs(z1.imag),
                    np.minimum(np.abs(z1), np.abs(z1 - 1)))
    if np.any(dist < 1e-8):
        raise ValueError("kernel evaluated too close to the integration interval")
    q = rule.q
    try:
        num = -_rho_table(z1, q - 2)[q - 2]
    except ValueError:
        num = _numerator_quad(q, z1)
    out = num / _nodal(q, z1)
    return out[0] if scalar else out.reshape(z.shape)


@lru_cache(maxsize=8)
def _kernel_table(config):
    """k_q on every ellipse of the r grid: shape (n_r, n_q, n_zeta)."""
    qs = range(config.q_min, config.q_max + 1)
    tab = np.empty((len(config.r_grid), len(qs), config.n_zeta), dtype=complex)
    pts = []
    for ir, r in enumerate(config.r_grid):
        z, dfac = Ellipse(r).points(config.n_zeta)
        rho = _rho_table(z, config.q_max - 2)
        for iq, q in enumerate(qs):
            tab[ir, iq] = -rho[q - 2] / _nodal(q, z)
        pts.append((z, dfac))
    tab.setflags(write=False)
    return tab, tuple(pts)


# ---------------------------------------------------------------------------
# numerical range and remainder bounds


def range_rectangle(factors, centered=True):
    """Rectangle enclosing the numerical range of the Kronecker sum of ``factors``.

    Factor ``A`` contributes ``sigma + [-|H|, |H|] x i[-|S|, |S|]``, where H and
    S are the Hermitian and skew-Hermitian parts of ``A - sigma I``. With
    ``centered`` the center ``sigma`` is the average eigenvalue trace(A)/n,
    otherwise 0. The rectangle of the sum is the Minkowski sum.
    """
    rect = RangeRectangle(0.0, 0.0, 0.0, 0.0)
    for a in factors:
        a = np.asarray(a)
        sigma = trace_shift(a) if centered else 0.0
        if sigma != 0:
            a = a - sigma * np.eye(a.shape[0])
        h, s = herm_skew_split(a)
        nh = two_norm_estimate(h)
        ns = two_norm_estimate(s)
        rect = rect + RangeRectangle(-nh, nh, -ns, ns).shifted(sigma)
    return rect


class RemainderTable:
    """Lazily computed bounds ``B[s][q - q_min, l - 1]`` for one rectangle."""

    def __init__(self, rect, p, config=DEFAULT_CONFIG):
        self.rect = rect
        self.p = int(p)
        self.config = config
        self._by_s = {}
        tab, pts = _kernel_table(config)
        fact = np.array([math.factorial(l - 1) for l in range(1, self.p + 1)], dtype=float)
        self._weights = []
        for ir in range(len(config.r_grid)):
            z, dfac = pts[ir]
            powers = z[None, :] ** np.arange(self.p)[:, None] / fact[:, None]
            # (n_zeta, n_q * p)
            g = tab[ir][:, None, :] * powers[None, :, :] * dfac[None, None, :]
            self._weights.append((z, g.reshape(-1, config.n_zeta).T))
        self._w0 = rect.boundary(config.n_boundary)

    def bounds(self, s):
        if s not in self._by_s:
            self._by_s[s] = self._compute(self._w0 / 2.0 ** s)
        return self._by_s[s]

    def _compute(self, w):
        cfg = self.config
        best = None
        with np.errstate(over="ignore", invalid="ignore"):
            for z, g in self._weights:
                e = np.exp(np.outer(w, 1.0 - z))
                vals = np.abs(e @ g)
                vals = np.where(np.isfinite(vals), vals, np.inf)
                worst = vals.max(axis=0)
                best = worst if best is None else np.minimum(best, worst)
        nq = cfg.q_max - cfg.q_min + 1
        return SPECTRAL_SET_CONSTANT / cfg.n_zeta * best.reshape(nq, self.p)


@lru_cache(maxsize=64)
def _table(rect_tuple, p, config):
    return RemainderTable(RangeRectangle(*rect_tuple), p, config)


def remainder_table(rect, p, config=DEFAULT_CONFIG):
    return _table(rect.astuple(), int(p), config)


def remainder_bound(rule, rect, ell, scale_divisor=1.0, config=DEFAULT_CONFIG):
    """Upper estimate of the 2-norm quadrature remainder for ``f_ell(., K/scale_divisor)``."""
    if ell < 1:
        raise ValueError("ell must be at least 1")
    if not config.q_min <= rule.q <= config.q_max:
        config = BoundConfig(config.r_grid, config.n_zeta, config.n_boundary,
                             min(config.q_min, rule.q), max(config.q_max, rule.q),
                             config.s_max)
    s = math.log2(scale_divisor)
    tab = remainder_table(rect, ell, config)
    if s == int(s) and s >= 0:
        b = tab.bounds(int(s))
    else:
        b = tab._compute(tab._w0 / scale_divisor)
    return float(b[rule.q - config.q_min, ell - 1])


def _gll_mp(q, mpmath):
    """GLL nodes and weights on [0, 1] refined by Newton's method at the working precision."""
    n = q - 1
    nodes, weights = [], []
    for th in gll_rule(q).nodes:
        x = mpmath.mpf(2 * float(th) - 1)
        interior = 0 < float(th) < 1
        for _ in range(60 if interior else 0):
            p0, p1 = mpmath.mpf(1), x
            for kk in range(1, n):
                p0, p1 = p1, ((2 * kk + 1) * x * p1 - kk * p0) / (kk + 1)
            d1 = n * (p0 - x * p1) / (1 - x * x)
            d2 = (2 * x * d1 - n * (n + 1) * p1) / (1 - x * x)
            step = d1 / d2
            x -= step
            if abs(step) < mpmath.mpf(10) ** (-mpmath.mp.dps + 5):
                break
        p0, p1 = mpmath.mpf(1), x
        for kk in range(1, n):
            p0, p1 = p1, ((2 * kk + 1) * x * p1 - kk * p0) / (kk + 1)
        nodes.append((x + 1) / 2)
        weights.append(1 / (n * (n + 1) * p1 ** 2))
    return nodes, weights


def scalar_quadrature_error(rule, w, ell):
    """|phi_ell(w) - sum_i w_i f_ell(theta_i, w)| for the exact rule, in extended precision.

    Nodes and weights are refined beyond double precision, so the result is the
    remainder of the rule itself rather than of its rounded representation.
    """
    import mpmath

    mpmath.mp.dps = 40
    w = mpmath.mpc(complex(w))
    if abs(w) < mpmath.mpf("1e-30"):
        exact = 1 / mpmath.factorial(ell)
    else:
        # phi_l(w) = (e^w - sum_{k<l} w^k/k!) / w^l
        exact = (mpmath.exp(w) - sum(w ** k / mpmath.factorial(k) for k in range(ell))) / w ** ell
    approx = mpmath.mpf(0)
    for th, wt in zip(*_gll_mp(rule.q, mpmath)):
        approx += wt * th ** (ell - 1) / mpmath.factorial(ell - 1) * mpmath.exp((1 - th) * w)
    return float(abs(exact - approx))


# ---------------------------------------------------------------------------
# selection of s and q


def tucker_count(mode, s, s_hat, q, p):
    if mode == "same_vector":
        return q + s * p + s_hat
    if mode == "lincomb":
        return q * p + s * p + s_hat
    raise ValueError(f"unknown mode {mode!r}")


def _admissible(mode, b, norms, delta, s):
    """Boolean over q rows: does every l satisfy the remainder criterion."""
    p = b.shape[1]
    if mode == "same_vector":
        lhs = b * norms[0]
        rhs = delta * 2.0 ** (s * np.arange(1, p + 1))
        return np.all(lhs <= rhs[None, :], axis=1), lhs / rhs[None, :]
    # lincomb: sum_{k=1}^{l} B[l-k+1] |v_{p+1-k}| / 2^{(l-k+1)s}
    scaled = b / 2.0 ** (s * np.arange(1, p + 1))[None, :]
    lhs = np.zeros_like(b)
    for l in range(1, p + 1):
        for k in range(1, l + 1):
            lhs[:, l - 1] += scaled[:, l - k] * norms[p - k]
    return np.all(lhs <= delta, axis=1), lhs / delta


def select_plan(mode, rect, p, norms, delta, s_hat=0, config=DEFAULT_CONFIG, s_min=None):
    """Smallest-cost (s, q) meeting the remainder criterion for every order up to ``p``.

    ``norms`` holds the 2-norm of the single vector (``same_vector``) or of
    ``v_1..v_p`` (``lincomb``). The search starts at ``s = max(s_hat, s_min)``,
    so that the requested extra scales come out of the squaring phase.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    norms = np.asarray(norms, dtype=float)
    expected = 1 if mode == "same_vector" else p
    if mode not in ("same_vector", "lincomb"):
        raise ValueError(f"unknown mode {mode!r}")
    if norms.shape != (expected,):
        raise ValueError(f"{mode} needs {expected} norms, got {norms.size}")
    table = remainder_table(rect, p, config)
    start = s_hat if s_min is None else max(s_hat, s_min)
    prev = None
    worst = None
    for s in range(start, config.s_max + 1):
        ok, ratio = _admissible(mode, table.bounds(s), norms, delta, s)
        if np.any(ok):
            q = config.q_min + int(np.argmax(ok))
            T = tucker_count(mode, s, s_hat, q, p)
        else:
            q, T = None, math.inf
            worst = int(np.argmax(np.nan_to_num(ratio[-1], nan=np.inf))) + 1
        if prev is not None and T > prev[2]:
            break
        if q is not None:
            prev = (s, q, T)
    if prev is None:
        raise PlanError(
            f"no node count up to {config.q_max} meets tolerance {delta:g} for "
            f"phi_{worst} at any scaling up to {config.s_max}"
        )
    s, q, T = prev
    return QuadraturePlan(mode, s, q, gll_rule(q), s_hat, p, T, delta)
