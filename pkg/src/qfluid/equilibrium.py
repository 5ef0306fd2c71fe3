"""Semiclassical equilibrium Wigner symbols and Moyal-product bookkeeping.

Phase-space functions are handled through *jets*: the value together with
first and second derivatives in ``x`` and ``p`` at a set of points. Symbols
that depend on ``(x, p)`` only through ``h`` get exact jets by the chain
rule; anything else can be differentiated by central differences with
:func:`finite_difference_jet`.

Array conventions: positions ``x`` and momenta ``p`` have a leading axis of
length ``d`` and broadcast against each other over the remaining axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .exceptions import ConvergenceError, DomainError

__all__ = [
    "TrigField",
    "Jet",
    "EquilibriumSymbol",
    "moyal_term",
    "finite_difference_jet",
    "moyal_residual",
    "moment_quadrature",
    "lemma_moments",
]


# ---------------------------------------------------------------------------
# Analytic test fields


@dataclass(frozen=True)
class TrigField:
    """``f(x) = c + sum_m a_m sin(k_m . x + theta_m)`` with exact derivatives.

    Parameters
    ----------
    constant : float
    amplitudes, phases : sequence of float
    wavevectors : sequence of sequence of float
        One ``d``-vector per mode.
    """

    constant: float = 0.0
    amplitudes: tuple = ()
    wavevectors: tuple = ()
    phases: tuple = ()

    def _modes(self, x):
        x = np.asarray(x, dtype=float)
        for a, k, th in zip(self.amplitudes, self.wavevectors, self.phases):
            k = np.asarray(k, dtype=float).reshape((-1,) + (1,) * (x.ndim - 1))
            arg = np.sum(k * x, axis=0) + th
            yield a, k, arg

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape[1:], float(self.constant))
        for a, _, arg in self._modes(x):
            out = out + a * np.sin(arg)
        return out

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for a, k, arg in self._modes(x):
            out = out + a * k * np.cos(arg)
        return out

    def hess(self, x):
        x = np.asarray(x, dtype=float)
        d = x.shape[0]
        out = np.zeros((d, d) + x.shape[1:])
        for a, k, arg in self._modes(x):
            kk = k[:, None] * k[None, :]
            out = out - a * kk * np.sin(arg)
        return out


# ---------------------------------------------------------------------------
# Jets and the Moyal expansion


@dataclass
class Jet:
    """Value and derivatives of a phase-space function at a set of points.

    ``gx[i] = d/dx_i``, ``gp[i] = d/dp_i``, ``hxx[i, j]``, ``hpp[i, j]`` and
    ``hxp[i, j] = d^2/(dx_i dp_j)``.
    """

    value: np.ndarray
    gx: np.ndarray
    gp: np.ndarray
    hxx: np.ndarray
    hxp: np.ndarray
    hpp: np.ndarray

    def __add__(self, other):
        if np.isscalar(other):
            return Jet(self.value + other, self.gx, self.gp, self.hxx, self.hxp, self.hpp)
        return Jet(
            self.value + other.value,
            self.gx + other.gx,
            self.gp + other.gp,
            self.hxx + other.hxx,
            self.hxp + other.hxp,
            self.hpp + other.hpp,
        )

    __radd__ = __add__

    def scale(self, c):
        return Jet(c * self.value, c * self.gx, c * self.gp, c * self.hxx, c * self.hxp, c * self.hpp)


def moyal_term(k, a, b, eps=1.0):
    """Order-``k`` term ``eps^k (a #_k b)`` of the Moyal product expansion.

    Parameters
    ----------
    k : {0, 1, 2}
    a, b : Jet
    eps : float
        Semiclassical parameter; the term is returned already weighted by ``eps**k``.

    Returns
    -------
    ndarray
        Real for even ``k``, complex for ``k = 1``.
    """
    if k == 0:
        return a.value * b.value
    if k == 1:
        bracket = np.einsum("i...,i...->...", a.gx, b.gp) - np.einsum("i...,i...->...", a.gp, b.gx)
        return eps * 0.5j * bracket
    if k == 2:
        t1 = 0.5 * np.einsum("ij...,ij...->...", a.hxx, b.hpp)
        # a_{x_i p_j} b_{p_i x_j} = a.hxp[i, j] * b.hxp[j, i]
        t2 = np.einsum("ij...,ji...->...", a.hxp, b.hxp)
        t3 = 0.5 * np.einsum("ij...,ij...->...", a.hpp, b.hxx)
        return eps**2 * (-0.25) * (t1 - t2 + t3)
    raise DomainError(f"Moyal terms are implemented for k in {{0, 1, 2}}, got {k}")


def finite_difference_jet(func, x, p, step=1e-3):
    """Jet of ``func(x, p)`` by fourth-order central differences.

    ``x`` and ``p`` must have the same shape ``(d, ...)``.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    d = x.shape[0]
    z = np.concatenate([x, p])
    f0 = func(x, p)

    def f(zz):
        return func(zz[:d], zz[d:])

    def unit(i):
        e = np.zeros((2 * d,) + (1,) * (z.ndim - 1))
        e[i] = step
        return e

    m = 2 * d
    g = np.zeros((m,) + f0.shape)
    H = np.zeros((m, m) + f0.shape)
    plus = {}
    for i in range(m):
        e = unit(i)
        fp1, fm1 = f(z + e), f(z - e)
        fp2, fm2 = f(z + 2 * e), f(z - 2 * e)
        g[i] = (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * step)
        H[i, i] = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * step**2)
        plus[i] = e
    for i in range(m):
        for j in range(i + 1, m):
            ei, ej = plus[i], plus[j]

            def mixed(s):
                return (f(z + s * (ei + ej)) - f(z + s * (ei - ej)) - f(z - s * (ei - ej)) + f(z - s * (ei + ej))) / (
                    4.0 * (s * step) ** 2
                )

            H[i, j] = H[j, i] = (4.0 * mixed(1.0) - mixed(2.0)) / 3.0
    return Jet(f0, g[:d], g[d:], H[:d, :d], H[:d, d:], H[d:, d:])


# ---------------------------------------------------------------------------
# Equilibrium symbols


@dataclass
class EquilibriumSymbol:
    """Equilibrium symbol for multipliers ``A(x)`` and ``B(x)``.

    Parameters
    ----------
    stat : specfun.Statistics
    A : TrigField
    B : sequence of TrigField
        One component per dimension.
    """

    stat: specfun.Statistics
    A: TrigField
    B: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.B) != self.stat.dimension:
            raise DomainError("B needs one component per dimension")

    def pieces(self, x, p):
        """Derivatives of ``h`` and the functions ``F_k``; see the module docstring."""
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        T = self.stat.temperature
        lam = self.stat.lam
        d = self.stat.dimension
        Bv = np.stack([b.value(x) for b in self.B])
        dB = np.stack([b.grad(x) for b in self.B], axis=1)  # dB[i, k] = d_i B_k
        d2B = np.stack([b.hess(x) for b in self.B], axis=2)  # d2B[i, j, k] = d_i d_j B_k
        q = p - Bv
        h = 0.5 * np.sum(q**2, axis=0) / T - self.A.value(x) / T
        X = -(np.einsum("k...,ik...->i...", q, dB) + self.A.grad(x)) / T
        P = q / T
        Xij = (np.einsum("ik...,jk...->ij...", dB, dB) - np.einsum("k...,ijk...->ij...", q, d2B) - self.A.hess(x)) / T
        S = -dB / T
        Pij = np.eye(d).reshape((d, d) + (1,) * (q.ndim - 1)) / T
        w = np.exp(-h)
        denom = 1.0 + lam * w
        if np.any(denom <= 0):
            raise DomainError("equilibrium symbol is singular (exp(h) + lambda <= 0)")
        F = {k: w / denom ** (k + 1) for k in (0, 1, 2, 3)}
        return dict(h=h, q=q, X=X, P=P, Xij=Xij, S=S, Pij=Pij, F=F, w=w)

    # -- values ----------------------------------------------------------

    def h(self, x, p):
        return self.pieces(x, p)["h"]

    def g0(self, x, p):
        """``1 / (exp(h) + lam)``."""
        return self.pieces(x, p)["F"][0]

    def exp0(self, x, p):
        return np.exp(self.h(x, p))

    @staticmethod
    def _contractions(pc):
        X, P, Xij, S, Pij = pc["X"], pc["P"], pc["Xij"], pc["S"], pc["Pij"]
        c1 = np.einsum("ij...,ij...->...", Xij, Pij) - np.einsum("ij...,ji...->...", S, S)
        c2 = (
            np.einsum("ij...,i...,j...->...", Xij, P, P)
            - 2.0 * np.einsum("ij...,i...,j...->...", S, P, X)
            + np.einsum("ij...,i...,j...->...", Pij, X, X)
        )
        return c1, c2

    def g2(self, x, p):
        """Second-order correction ``G_2`` of the equilibrium symbol."""
        pc = self.pieces(x, p)
        F = pc["F"]
        c1, c2 = self._contractions(pc)
        return 0.125 * c1 * (F[1] - 2.0 * F[2]) + 0.125 * c2 * (F[1] / 3.0 - 2.0 * F[2] + 2.0 * F[3])

    def exp2(self, x, p, sign=1.0):
        """Second-order term of the quantum exponential of ``sign * h``."""
        pc = self.pieces(x, p)
        if sign not in (1.0, -1.0):
            raise DomainError("sign must be +1 or -1")
        X, P, Xij, S, Pij = (sign * pc[k] for k in ("X", "P", "Xij", "S", "Pij"))
        e = np.exp(sign * pc["h"])
        bracket = (
            np.einsum("ij...,ij...->...", Xij, Pij)
            - np.einsum("ij...,ji...->...", S, S)
            + np.einsum("ij...,i...,j...->...", Xij, P, P) / 3.0
            - 2.0 * np.einsum("ij...,i...,j...->...", S, P, X) / 3.0
            + np.einsum("ij...,i...,j...->...", Pij, X, X) / 3.0
        )
        return -e / 8.0 * bracket

    # -- jets ------------------------------------------------------------

    def _h_function_jet(self, pc, f1, f2, f0):
        """Jet of ``f(h)`` from ``f(h), f'(h), f''(h)``."""
        X, P, Xij, S, Pij = pc["X"], pc["P"], pc["Xij"], pc["S"], pc["Pij"]
        outer = lambda a, b: a[:, None] * b[None, :]  # noqa: E731
        return Jet(
            f0,
            f1 * X,
            f1 * P,
            f2 * outer(X, X) + f1 * Xij,
            f2 * outer(X, P) + f1 * S,
            f2 * outer(P, P) + f1 * np.broadcast_to(Pij, outer(P, P).shape),
        )

    def g0_jet(self, x, p):
        pc = self.pieces(x, p)
        F = pc["F"]
        # G0' = -F1, G0'' = 2 F2 - F1
        return self._h_function_jet(pc, -F[1], 2.0 * F[2] - F[1], F[0])

    def exp0_jet(self, x, p):
        pc = self.pieces(x, p)
        e = np.exp(pc["h"])
        return self._h_function_jet(pc, e, e, e)

    def g2_jet(self, x, p, step=1e-3):
        x, p = np.broadcast_arrays(np.asarray(x, float), np.asarray(p, float))
        return finite_difference_jet(self.g2, x, p, step)

    def exp2_jet(self, x, p, step=1e-3):
        x, p = np.broadcast_arrays(np.asarray(x, float), np.asarray(p, float))
        return finite_difference_jet(self.exp2, x, p, step)


def _sym(k, a, b, eps):
    return 0.5 * (moyal_term(k, a, b, eps) + moyal_term(k, b, a, eps))


def moyal_residual(symbol, x, p, eps, step=1e-3, orders=False):
    """Residual of ``(Exp(h) + lam) # G = 1`` with every series truncated after ``eps^2``.

    The symmetrised product ``(a # b + b # a) / 2`` is expanded through
    ``#_2``. All cross terms of the truncated series are kept, so the
    residual carries the neglected ``eps^4`` contributions.

    Returns
    -------
    ndarray or dict
        The residual at each point, or with ``orders=True`` its coefficients
        of ``eps^0 .. eps^6``.
    """
    lam = symbol.stat.lam
    E0 = symbol.exp0_jet(x, p) + lam
    E2 = symbol.exp2_jet(x, p, step)
    G0 = symbol.g0_jet(x, p)
    G2 = symbol.g2_jet(x, p, step)
    coeff = {m: 0.0 for m in range(7)}
    for ea, e_pow in ((E0, 0), (E2, 2)):
        for gb, g_pow in ((G0, 0), (G2, 2)):
            for k in (0, 1, 2):
                coeff[e_pow + g_pow + k] = coeff[e_pow + g_pow + k] + _sym(k, ea, gb, 1.0)
    coeff[0] = coeff[0] - 1.0
    if orders:
        return coeff
    return sum(np.real(c) * eps**m for m, c in coeff.items())


# ---------------------------------------------------------------------------
# Momentum quadrature


@dataclass(frozen=True)
class _Rule:
    nodes: np.ndarray
    weights: np.ndarray


def _composite_rule(radius, panels, nodes):
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(-radius, radius, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel()
    return _Rule(x, w)


def _tensor_moment(f, d, order, center, rule, chunk=1 << 20):
    m = rule.nodes.size
    total = np.zeros((d,) * order)
    magnitude = 0.0
    count = m**d
    for start in range(0, count, chunk):
        idx = np.arange(start, min(start + chunk, count))
        sub = np.stack(np.unravel_index(idx, (m,) * d))
        q = rule.nodes[sub]
        w = np.prod(rule.weights[sub], axis=0)
        p = q + center[:, None]
        vals = np.asarray(f(p)) * w
        magnitude += float(np.sum(np.abs(vals) * np.sum(p * p, axis=0) ** (order / 2.0)))
        if order == 0:
            total = total + np.sum(vals)
        elif order == 1:
            total = total + p @ vals
        elif order == 2:
            total = total + np.einsum("n,in,jn->ij", vals, p, p)
        elif order == 4:
            pp = np.einsum("in,jn->ijn", p, p)
            total = total + np.einsum("n,ijn,kln->ijkl", vals, pp, pp)
        else:
            raise DomainError(f"weight order must be 0, 1, 2 or 4, got {order}")
    return total, magnitude


def moment_quadrature(f, d, order, center=None, radius=None, temperature=1.0, z=0.0, panels=8, nodes=12, rtol=1e-9, max_nodes=None):
    """Momentum moment ``int f(p) p_i ... p_l dp`` by tensor-product Gauss-Legendre.

    Parameters
    ----------
    f : callable
        Maps momenta of shape ``(d, N)`` to values of shape ``(N,)``.
    d : int
    order : {0, 1, 2, 4}
        Number of momentum factors in the weight.
    center : array_like, optional
        Centre of the integration box (usually ``B``).
    radius : float, optional
        Half-width of the box. Defaults to ``sqrt(2 T (max(z, 0) + 40))``, so
        that a Gaussian tail ``exp(-|q|^2/2T + z)`` is below ``e^-40`` at the edge.
    panels, nodes : int
        Initial composite rule size per axis. The panel count doubles until
        two successive results agree to ``rtol``.
    rtol : float
        Certification tolerance relative to ``int |f| |p|^order dp``, so that
        components vanishing by symmetry are certified as well.
    max_nodes : int, optional
        Cap on nodes per axis; defaults to 800 for ``d <= 2`` and 200 otherwise.
    """
    if max_nodes is None:
        max_nodes = 800 if d <= 2 else 200
    center = np.zeros(d) if center is None else np.asarray(center, dtype=float).reshape(d)
    if radius is None:
        radius = math.sqrt(2.0 * temperature * (max(z, 0.0) + 40.0))
    coarse, _ = _tensor_moment(f, d, order, center, _composite_rule(radius, panels, nodes))
    while True:
        panels *= 2
        fine, magnitude = _tensor_moment(f, d, order, center, _composite_rule(radius, panels, nodes))
        scale = max(magnitude, 1e-300)
        err = float(np.max(np.abs(fine - coarse))) / scale
        if err <= rtol:
            return fine
        if panels * nodes > max_nodes:
            raise ConvergenceError(f"momentum quadrature not certified (relative change {err:.2e})")
        coarse = fine


def lemma_moments(symbol, x):
    """Closed-form ``<G_2>`` and ``<p G_2>`` at one position ``x`` (shape ``(d,)``)."""
    st = symbol.stat
    T = st.temperature
    d = st.dimension
    s = st.half_dim
    nd = st.n_d
    x = np.asarray(x, dtype=float).reshape(d, 1)
    A = float(symbol.A.value(x)[0])
    gA = symbol.A.grad(x)[:, 0]
    lapA = float(np.trace(symbol.A.hess(x)[:, :, 0]))
    Bv = np.array([float(b.value(x)[0]) for b in symbol.B])
    dB = np.stack([b.grad(x)[:, 0] for b in symbol.B], axis=1)  # dB[k, j] = d_k B_j
    d2B = np.stack([b.hess(x)[:, :, 0] for b in symbol.B], axis=2)  # d2B[j, k, i] = d_j d_k B_i
    z = A / T
    ph = {k: specfun.phi(st, s - k, z) for k in (1, 2, 3)}
    shear = np.einsum("kj,kj->", dB, dB - dB.T)
    g2 = nd / (24.0 * T**2) * (2.0 * lapA - shear) * ph[2] + nd / (24.0 * T**3) * (gA @ gA) * ph[3]
    # d_j [(d_j B_i - d_i B_j) phi_{s-1}(A/T)] with d_j phi_{s-1} = phi_{s-2} d_j A / T
    lapB = np.einsum("jji->i", d2B)
    grad_divB = np.einsum("ijj->i", d2B)
    curl = dB - dB.T  # curl[j, i] = d_j B_i - d_i B_j
    term = (lapB - grad_divB) * ph[1] + (gA @ curl) * ph[2] / T
    pg2 = Bv * g2 + nd / (12.0 * T) * term
    return float(g2), pg2
