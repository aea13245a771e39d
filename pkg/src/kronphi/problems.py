"""Finite-difference discretizations on [0, 1]^d and the benchmark problems."""
from dataclasses import dataclass, field
import math
from typing import Callable, Optional

import numpy as np

from .phi import KroneckerSum

DIRICHLET = "dirichlet_homogeneous"
NEUMANN = "neumann_homogeneous"


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [0, 1].

    Dirichlet grids keep only the ``n`` interior nodes (h = 1/(n+1)); Neumann
    grids include both boundary nodes (h = 1/(n-1)).
    """
    n: int
    bc: str = DIRICHLET
    order: int = 2

    def __post_init__(self):
        if self.bc not in (DIRICHLET, NEUMANN):
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        if self.order not in (2, 4):
            raise ValueError("order must be 2 or 4")
        need = {(DIRICHLET, 2): 1, (DIRICHLET, 4): 6, (NEUMANN, 2): 2, (NEUMANN, 4): 6}
        if self.n < need[self.bc, self.order]:
            raise ValueError(f"n={self.n} too small for an order-{self.order} stencil")

    @property
    def h(self):
        return 1.0 / (self.n + 1) if self.bc == DIRICHLET else 1.0 / (self.n - 1)

    @property
    def x(self):
        if self.bc == DIRICHLET:
            return self.h * np.arange(1, self.n + 1)
        return self.h * np.arange(self.n)


def fd_weights(x0, nodes, deriv, deriv_nodes=()):
    """Weights exact on polynomials of the highest possible degree.

    Approximates ``u^(deriv)(x0)`` by ``sum_i c_i u(nodes_i) + sum_j e_j u'(deriv_nodes_j)``.
    Returns ``(c, e)``. Coordinates are in units of the grid spacing.
    """
    nodes = np.asarray(nodes, dtype=float)
    dn = np.asarray(deriv_nodes, dtype=float)
    m = nodes.size + dn.size
    powers = np.arange(m)
    rows = (nodes - x0)[None, :] ** powers[:, None]
    if dn.size:
        drows = powers[:, None] * (dn - x0)[None, :] ** np.maximum(powers - 1, 0)[:, None]
        rows = np.hstack([rows, drows])
    rhs = np.zeros(m)
    rhs[deriv] = math.factorial(deriv)
    w = np.linalg.solve(rows, rhs)
    return w[:nodes.size], w[nodes.size:]


_CENTERED = {
    (2, 2): (np.array([1.0, -2.0, 1.0]), 1),
    (2, 1): (np.array([-0.5, 0.0, 0.5]), 1),
    (4, 2): (np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12, 2),
    (4, 1): (np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12, 2),
}


def fd_matrix(grid, term="second_derivative"):
    """Dense finite-difference matrix for the first or second derivative."""
    deriv = {"second_derivative": 2, "first_derivative": 1}[term]
    n, order = grid.n, grid.order
    stencil, half = _CENTERED[order, deriv]
    a = np.zeros((n, n))
    for i in range(n):
        for off, c in zip(range(-half, half + 1), stencil):
            if 0 <= i + off < n:
                a[i, i + off] = c
    if grid.bc == DIRICHLET:
        if order == 4:
            # node 1 of the full grid from nodes 0..6, one degree beyond the
            # interior stencil so the boundary row does not dominate; u_0 = 0 drops out
            c, _ = fd_weights(1.0, np.arange(7.0), deriv)
            a[0, :] = 0.0
            a[0, :6] = c[1:]
            a[-1, :] = 0.0
            a[-1, -6:] = (-1) ** deriv * c[1:][::-1]
    else:
        if order == 2:
            # ghost reflection u_{-1} = u_1
            a[0, 1] += stencil[0]
            a[-1, -2] += stencil[-1]
        else:
            for i in range(2):
                c, _ = fd_weights(float(i), np.arange(5.0), deriv, deriv_nodes=(0.0,))
                a[i, :] = 0.0
                a[i, :5] = c
                a[n - 1 - i, :] = 0.0
                a[n - 1 - i, -5:] = (-1) ** deriv * c[::-1]
    return a / grid.h ** deriv


# ---------------------------------------------------------------------------
# problems


@dataclass
class ProblemRHS:
    """``u' = K u + g(t, u)`` with ``K`` block diagonal, one Kronecker sum per block.

    States are tuples of tensors, one per block.
    """
    name: str
    blocks: tuple
    g: Callable
    u0: tuple
    T: float
    exact: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    @property
    def dims(self):
        return self.blocks[0].dims

    def linear(self, u):
        return tuple(k.apply(x) for k, x in zip(self.blocks, u))

    def f(self, t, u):
        return tuple(a + b for a, b in zip(self.linear(u), self.g(t, u)))


def _grid_axes(x, d):
    return np.meshgrid(*([x] * d), indexing="ij")


def validation_operator(n, d):
    """Complex Laplacian ``(1+i)/100 Delta`` (Dirichlet, order 2) and its test vector."""
    g = Grid1D(n, DIRICHLET, 2)
    a = (1 + 1j) / 100 * fd_matrix(g)
    xs = _grid_axes(g.x, d)
    v = 4096 * (1 + 1j) * np.prod([x * (1 - x) for x in xs], axis=0)
    return KroneckerSum([a] * d), v.astype(complex)


def adr_problem(n=20, eps=0.5, alpha=10.0, T=0.1, d=3):
    """Advection-diffusion-reaction with manufactured solution ``e^t u0``."""
    g1 = Grid1D(n, DIRICHLET, 2)
    a = eps * fd_matrix(g1) + alpha * fd_matrix(g1, "first_derivative")
    k = KroneckerSum([a] * d)
    xs = _grid_axes(g1.x, d)
    q = [x * (1 - x) for x in xs]
    u0 = 64 * np.prod(q, axis=0)
    lap = np.zeros_like(u0)
    grad = np.zeros_like(u0)
    for mu in range(d):
        others = np.prod([q[nu] for nu in range(d) if nu != mu], axis=0) if d > 1 else 1.0
        lap += 64 * (-2.0) * others
        grad += 64 * (1 - 2 * xs[mu]) * others
    # psi = u_t - eps Lap u - alpha sum_mu d_mu u - 1/(1+u^2) for u = e^t u0
    lin0 = u0 - eps * lap - alpha * grad

    def g(t, u):
        (w,) = u
        et = math.exp(t)
        psi = et * lin0 - 1.0 / (1.0 + (et * u0) ** 2)
        return (1.0 / (1.0 + w ** 2) + psi,)

    def exact(t):
        return (math.exp(t) * u0 + 0j,)

    return ProblemRHS("adr", (k,), g, (u0.astype(complex),), T, exact,
                      dict(eps=eps, alpha=alpha, n=n, d=d))


def allen_cahn_u0(x1, x2, beta=7.0, alpha=0.75):
    r = np.sqrt((x1 - 0.5) ** 2 + (x2 - 0.5) ** 2)
    # numpy atan2(0, 0) = 0
    ang = np.arctan2(x2 - 0.5, x1 - 0.5)
    return np.tanh((0.25 + 0.1 * np.cos(beta * ang) - r) / (math.sqrt(2) * alpha))


def allen_cahn_problem(n=21, eps=0.05, beta=7.0, alpha=0.75, T=0.025):
    """2D Allen-Cahn with Neumann conditions; ``1/eps^2`` is folded into the first factor."""
    g1 = Grid1D(n, NEUMANN, 2)
    lap = fd_matrix(g1)
    a1 = lap + np.eye(n) / eps ** 2
    k = KroneckerSum([a1, lap])
    x1, x2 = _grid_axes(g1.x, 2)
    u0 = allen_cahn_u0(x1, x2, beta, alpha)

    def g(t, u):
        (w,) = u
        return (-(w ** 3) / eps ** 2,)

    return ProblemRHS("ac", (k,), g, (u0.astype(complex),), T, None,
                      dict(eps=eps, beta=beta, alpha=alpha, n=n))


def brusselator_problem(n=11, a=1.0, b=3.0, c=1.0, d1=0.02, d2=0.02, T=1.0):
    """3D Brusselator, order-4 Neumann differences, two diagonal blocks."""
    g1 = Grid1D(n, NEUMANN, 4)
    lap = fd_matrix(g1)
    k1 = KroneckerSum([d1 * lap - (b + 1) * np.eye(n), d1 * lap, d1 * lap])
    k2 = KroneckerSum([d2 * lap] * 3)
    xs = _grid_axes(g1.x, 3)
    u0 = 64.0 ** 2 * np.prod([x ** 2 * (1 - x) ** 2 for x in xs], axis=0)
    v0 = np.full(u0.shape, c)

    def g(t, w):
        u, v = w
        u2v = u * u * v
        return (a + u2v, b * u - u2v)

    return ProblemRHS("bruss", (k1, k2), g, (u0.astype(complex), v0.astype(complex)), T, None,
                      dict(a=a, b=b, c=c, d1=d1, d2=d2, n=n))


PROBLEMS = {"adr": adr_problem, "ac": allen_cahn_problem, "bruss": brusselator_problem}
