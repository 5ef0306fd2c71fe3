"""Polylogarithms, quantum statistics functions and Fermi-type integrals.

The central object is the scaled polylogarithm

.. math::
    \\phi_s(z) = -\\frac{1}{\\lambda}\\,\\mathrm{Li}_s(-\\lambda e^z),

which for :math:`s > 0` equals the Fermi integral
:math:`\\Gamma(s)^{-1}\\int_0^\\infty t^{s-1}/(e^{t-z}+\\lambda)\\,dt` and reduces to
:math:`e^z` for :math:`\\lambda = 0`. All functions accept scalars or numpy
arrays for the argument ``z`` and return the same kind.

Evaluation strategy for :math:`\\phi_s` with :math:`x = -\\lambda e^z`:

* :math:`|x| \\le 1/2`: power series of :math:`\\mathrm{Li}_s`, written as
  :math:`e^z\\sum_k x^{k-1}k^{-s}` so that :math:`\\lambda \\to 0` is regular;
* :math:`\\lambda > 0`: integer :math:`s \\le 1` by closed forms (derivatives of
  the logistic function), otherwise composite Gauss quadrature of the Fermi
  integral, differentiated under the integral sign when :math:`s \\le 0`;
* :math:`\\lambda < 0`: closed forms for integer :math:`s \\le 1`, otherwise the
  expansion of :math:`\\mathrm{Li}_s(e^\\mu)` about :math:`\\mu = 0` in powers
  of :math:`\\mu` with zeta-function coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import special

from .exceptions import (
    ConvergenceError,
    DomainError,
    SupercriticalError,
    UnsupportedBranchError,
)

__all__ = [
    "Statistics",
    "zeta",
    "polylog",
    "phi",
    "phi_inverse",
    "recursion_coefficients",
    "fermi_like_integral",
    "gauss_moment",
    "critical_density",
    "phi0_asymptotic",
]

LAMBDA_BY_NAME = {"fd": 1.0, "mb": 0.0, "be": -1.0}

_SERIES_RADIUS = 0.5
_SERIES_TERMS = 64
# Panel breakpoints in y = t - mu for the Fermi integral; the Fermi edge sits at y = 0.
_PANEL_EDGES = np.array([-40.0, -24.0, -14.0, -8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0, 14.0, 24.0, 40.0])
_PANEL_NODES = 20
_TAIL = 40.0
_BOSE_TERMS = 36


@dataclass(frozen=True)
class Statistics:
    """Particle statistics together with scaled temperature and dimension.

    ``lam`` is +1 for Fermi-Dirac, 0 for Maxwell-Boltzmann and -1 for
    Bose-Einstein; any real value interpolates between them.
    """

    lam: float
    temperature: float = 1.0
    dimension: int = 3

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise DomainError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if not self.temperature > 0:
            raise DomainError(f"temperature must be positive, got {self.temperature}")
        if not math.isfinite(self.lam):
            raise DomainError("lambda must be finite")

    @classmethod
    def from_name(cls, name, temperature=1.0, dimension=3):
        """Build from ``'fd'``, ``'mb'``, ``'be'`` or a numeric string."""
        key = str(name).strip().lower()
        if key in LAMBDA_BY_NAME:
            lam = LAMBDA_BY_NAME[key]
        else:
            try:
                lam = float(key)
            except ValueError:
                raise DomainError(f"unknown statistics {name!r}") from None
        return cls(lam, temperature, dimension)

    @property
    def n_d(self):
        """Normalisation :math:`(2\\pi T)^{d/2}` of the Gaussian momentum integral."""
        return (2.0 * math.pi * self.temperature) ** (self.dimension / 2.0)

    @property
    def half_dim(self):
        return self.dimension / 2.0

    def replace(self, **changes):
        values = {"lam": self.lam, "temperature": self.temperature, "dimension": self.dimension}
        values.update(changes)
        return Statistics(**values)


def _as_output(values, like):
    if np.ndim(like) == 0:
        return float(values)
    return values


def _is_integer(s):
    return float(s).is_integer()


# ---------------------------------------------------------------------------
# Riemann zeta


def _eta_cvz(s, terms=32):
    # Cohen, Rodriguez Villegas, Zagier acceleration of the alternating series.
    d = (3.0 + math.sqrt(8.0)) ** terms
    d = 0.5 * (d + 1.0 / d)
    b = -1.0
    c = -d
    total = 0.0
    for k in range(terms):
        c = b - c
        total += c / (k + 1.0) ** s
        b = (k + terms) * (k - terms) * b / ((k + 0.5) * (k + 1.0))
    return total / d


@lru_cache(maxsize=512)
def zeta(s):
    """Riemann zeta function for real ``s != 1``.

    Uses an accelerated alternating (Dirichlet eta) series for ``s >= 1/2`` and
    the functional equation below that.
    """
    s = float(s)
    if s == 1.0:
        raise DomainError("zeta has a pole at s = 1")
    if s == 0.0:
        return -0.5
    if s >= 0.5:
        return _eta_cvz(s) / (1.0 - 2.0 ** (1.0 - s))
    if _is_integer(s) and int(s) % 2 == 0:
        return 0.0
    return (
        2.0**s
        * math.pi ** (s - 1.0)
        * math.sin(0.5 * math.pi * s)
        * math.gamma(1.0 - s)
        * zeta(1.0 - s)
    )


# ---------------------------------------------------------------------------
# Building blocks


def _series(s, z, log_abs_lam, sign):
    """``e^z * sum_k x^(k-1) / k^s`` with ``x = -sign*exp(z + log|lam|)``."""
    ez = np.exp(z)
    if sign == 0:
        return ez
    x = -sign * np.exp(z + log_abs_lam)
    total = np.ones_like(z)
    power = np.ones_like(z)
    for k in range(2, _SERIES_TERMS + 1):
        power = power * x
        total = total + power / k**s
    return ez * total


@lru_cache(maxsize=None)
def _logistic_poly(m):
    """Coefficients of P_m with L^(m) = L (1 - L) P_m(L) for the logistic L."""
    poly = np.polynomial.Polynomial([1.0])
    for _ in range(m - 1):
        L = np.polynomial.Polynomial([0.0, 1.0])
        poly = (1 - 2 * L) * poly + L * (1 - L) * poly.deriv()
    return poly


def _logistic_derivative(m, y):
    """m-th derivative of ``1/(1+exp(-y))``, accurate in both tails."""
    L = special.expit(y)
    if m == 0:
        return L
    return L * special.expit(-y) * _logistic_poly(m)(L)


@lru_cache(maxsize=None)
def _gauss_legendre(nodes):
    return np.polynomial.legendre.leggauss(nodes)


@lru_cache(maxsize=None)
def _gauss_jacobi(nodes, beta):
    x, w = special.roots_jacobi(nodes, 0.0, beta)
    return x, w


def _fermi_quadrature(s, mu, nodes=_PANEL_NODES):
    """Fermi integral ``F_s(mu)`` (lambda = 1) by composite Gauss quadrature.

    For ``s <= 0`` the integrand is differentiated ``m`` times in ``mu`` so that
    ``a = s + m`` lies in ``(0, 1]``.
    """
    m = 0 if s > 0 else int(math.floor(-s)) + 1
    a = s + m
    xg, wg = _gauss_legendre(nodes)
    xj, wj = _gauss_jacobi(nodes, a - 1.0)
    mu = np.asarray(mu, dtype=float)
    total = np.zeros_like(mu)
    if m == 0:
        t_lo = np.maximum(mu - _TAIL, 0.0)
        total = total + t_lo**a / a
    merged = np.zeros(mu.shape, dtype=bool)
    edges = _PANEL_EDGES
    for p in range(len(edges) - 1):
        tl = np.maximum(mu + edges[p], 0.0)
        tr = np.maximum(mu + edges[p + 1], 0.0)
        active = (tr > tl) & ~merged
        merged[:] = False
        if not np.any(active):
            continue
        at_origin = active & (tl == 0.0)
        interior = active & ~at_origin
        if np.any(interior):
            mu_i = mu[interior][:, None]
            width = (tr - tl)[interior]
            t = tl[interior][:, None] + 0.5 * (xg + 1.0) * width[:, None]
            f = t ** (a - 1.0) * _logistic_derivative(m, mu_i - t)
            total[interior] += 0.5 * width * (f @ wg)
        if np.any(at_origin):
            # The panel touching t = 0 absorbs its right neighbour so that the
            # endpoint singularity never sits just outside a Legendre panel.
            if p + 2 < len(edges):
                tr = np.where(at_origin, np.maximum(mu + edges[p + 2], 0.0), tr)
                merged = at_origin.copy()
            mu_o = mu[at_origin][:, None]
            half = 0.5 * tr[at_origin]
            t = half[:, None] * (xj + 1.0)
            f = _logistic_derivative(m, mu_o - t)
            total[at_origin] += half**a * (f @ wj)
    return total / math.gamma(a)


def _fermi_closed_form(s, mu):
    """F_s for integer s <= 1."""
    if s == 1:
        return np.logaddexp(0.0, mu)
    return _logistic_derivative(int(-s), mu)


@lru_cache(maxsize=None)
def _eulerian_row(m):
    row = [1]
    for n in range(2, m + 1):
        row = [(k + 1) * (row[k] if k < len(row) else 0) + (n - k) * (row[k - 1] if k >= 1 else 0) for k in range(n)]
    return row


@lru_cache(maxsize=None)
def _bose_coefficients(s):
    """Coefficients of the expansion of Li_s(e^mu) about mu = 0."""
    coeffs = np.zeros(_BOSE_TERMS)
    integer = _is_integer(s)
    for k in range(_BOSE_TERMS):
        if integer and k == int(s) - 1:
            continue
        coeffs[k] = zeta(s - k) / math.factorial(k)
    return coeffs


def _bose(s, mu):
    """``Li_s(e^mu)`` for ``mu < 0`` close to the origin (|mu| < 2 pi)."""
    mu = np.asarray(mu, dtype=float)
    if _is_integer(s) and s <= 1:
        one_minus_x = -np.expm1(mu)
        if s == 1:
            return -np.log(one_minus_x)
        m = int(-s)
        x = np.exp(mu)
        if m == 0:
            return x / one_minus_x
        row = _eulerian_row(m)
        numer = np.zeros_like(mu)
        for k, a_mk in enumerate(row):
            numer = numer + a_mk * x ** (k + 1)
        return numer / one_minus_x ** (m + 1)
    series = np.polynomial.polynomial.polyval(mu, _bose_coefficients(s))
    neg = -mu
    if _is_integer(s):
        n = int(s)
        harmonic = sum(1.0 / j for j in range(1, n))
        with np.errstate(divide="ignore", invalid="ignore"):
            sing = mu ** (n - 1) / math.factorial(n - 1) * (harmonic - np.log(neg))
        sing = np.where(neg == 0.0, 0.0, sing)
        return series + sing
    with np.errstate(divide="ignore"):
        sing = math.gamma(1.0 - s) * neg ** (s - 1.0)
    return series + sing


def _phi_raw(s, z, lam, nodes=_PANEL_NODES):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    if lam == 0.0:
        return np.exp(z)
    log_abs = math.log(abs(lam))
    sign = 1.0 if lam > 0 else -1.0
    log_x = z + log_abs
    if sign < 0 and np.any(log_x >= 0.0):
        raise DomainError("phi requires lambda*exp(z) > -1")
    near = log_x <= math.log(_SERIES_RADIUS)
    if np.any(near):
        out[near] = _series(s, z[near], log_abs, sign)
    far = ~near
    if np.any(far):
        mu = log_x[far]
        if sign > 0:
            if _is_integer(s) and s <= 1:
                val = _fermi_closed_form(s, mu)
            else:
                val = _fermi_quadrature(s, mu, nodes)
        else:
            val = _bose(s, mu)
        out[far] = val / abs(lam)
    return out


# ---------------------------------------------------------------------------
# Public operations


def polylog(s, x):
    """Polylogarithm :math:`\\mathrm{Li}_s(x)` for real order and real ``x < 1``.

    Parameters
    ----------
    s : float
        Order.
    x : float or ndarray
        Argument, strictly below 1.

    Returns
    -------
    float or ndarray
    """
    xa = np.asarray(x, dtype=float)
    if np.any(xa >= 1.0):
        raise DomainError("polylog requires x < 1")
    out = np.zeros_like(xa)
    small = np.abs(xa) <= _SERIES_RADIUS
    if np.any(small):
        xs = xa[small]
        total = np.zeros_like(xs)
        power = np.ones_like(xs)
        for k in range(1, _SERIES_TERMS + 1):
            power = power * xs
            total = total + power / k**s
        out[small] = total
    neg = (~small) & (xa < 0)
    if np.any(neg):
        mu = np.log(-xa[neg])
        if _is_integer(s) and s <= 1:
            out[neg] = -_fermi_closed_form(s, mu)
        else:
            out[neg] = -_fermi_quadrature(s, mu)
    pos = (~small) & (xa > 0)
    if np.any(pos):
        out[pos] = _bose(s, np.log(xa[pos]))
    return _as_output(out, x)


def phi(stat, s, z, certify=False):
    """Scaled polylogarithm :math:`\\phi_s(z)` for the statistics ``stat``.

    Parameters
    ----------
    stat : Statistics
        Only ``stat.lam`` is used.
    s : float
        Order.
    z : float or ndarray
        Argument; requires ``lam * exp(z) > -1``.
    certify : bool
        Repeat the evaluation with doubled quadrature nodes and raise
        :class:`ConvergenceError` if the two differ by more than 1e-10.
    """
    lam = float(getattr(stat, "lam", stat))
    value = _phi_raw(s, z, lam)
    if certify:
        check = _phi_raw(s, z, lam, nodes=2 * _PANEL_NODES)
        err = np.max(np.abs(check - value) / np.maximum(np.abs(check), 1e-300))
        if err > 1e-10:
            raise ConvergenceError(f"phi_{s} could not be certified (relative change {err:.2e})")
    return _as_output(value, z)


def _log_phi_and_ratio(s, z, lam):
    """log phi_s(z) and phi_{s-1}(z)/phi_s(z)."""
    ps = _phi_raw(s, z, lam)
    pm = _phi_raw(s - 1.0, z, lam)
    return np.log(ps), pm / ps


def _closed_inverse_order_one(y, lam):
    a = lam * y
    if lam > 0:
        return a + np.log(-np.expm1(-a)) - math.log(lam)
    with np.errstate(divide="ignore"):
        out = np.where(a > -0.693, np.log(-np.expm1(a)), np.log1p(-np.exp(a)))
    return out - math.log(-lam)


def phi_inverse(stat, y, order=None, rtol=1e-12, max_iter=100):
    """Solve :math:`\\phi_{d/2}(z) = y` for ``z``.

    Parameters
    ----------
    stat : Statistics
        Statistics; the order defaults to ``stat.dimension / 2``.
    y : float or ndarray
        Positive target values.
    order : float, optional
        Order ``s`` to invert instead of ``d/2``.
    rtol : float
        Required relative residual ``|phi(z) - y| / y``.

    Raises
    ------
    SupercriticalError
        For ``lam < 0`` and ``s > 1`` when ``y >= zeta(s)/|lam|``.
    """
    lam = float(stat.lam)
    s = stat.half_dim if order is None else float(order)
    ya = np.asarray(y, dtype=float)
    if np.any(~(ya > 0)):
        raise DomainError("phi_inverse requires y > 0")
    if lam == 0.0:
        return _as_output(np.log(ya), y)
    if lam < 0 and s > 1:
        bound = zeta(s) / abs(lam)
        bad = ya >= bound
        if np.any(bad):
            idx = np.argwhere(np.atleast_1d(bad))[0]
            raise SupercriticalError(
                f"density ratio {np.max(ya):.6g} exceeds the condensation bound {bound:.6g}",
                index=tuple(int(i) for i in idx),
            )
    if s == 1.0:
        z = _closed_inverse_order_one(ya, lam)
        if lam < 0 and np.any(z + math.log(-lam) >= 0.0):
            raise DomainError("density too large for the Bose branch in double precision")
        return _as_output(z, y)

    flat = ya.reshape(-1)
    log_y = np.log(flat)
    if lam > 0:
        lo = log_y.copy()
        scaled = np.maximum(2.0 * math.gamma(s + 1.0) * lam * flat, 1e-300)
        hi = np.maximum(scaled ** (1.0 / s) - math.log(lam), lo) + 1.0
        for _ in range(200):
            short = _phi_raw(s, hi, lam) < flat
            if not np.any(short):
                break
            hi[short] += 2.0 * (hi[short] - lo[short]) + 1.0
        sommerfeld = (math.gamma(s + 1.0) * lam * flat) ** (1.0 / s) - math.log(lam)
        z = np.where(lam * flat > 10.0, sommerfeld, log_y)
        z = np.clip(z, lo, hi)
    else:
        z_max = -math.log(-lam)
        hi = np.minimum(log_y, z_max)
        lo = np.log(flat / (1.0 + abs(lam) * flat))
        z = lo.copy()

    active = np.ones(flat.shape, dtype=bool)
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        zi = z[idx]
        log_p, ratio = _log_phi_and_ratio(s, zi, lam)
        f = log_p - log_y[idx]
        below = f < 0
        lo[idx] = np.where(below, np.maximum(lo[idx], zi), lo[idx])
        hi[idx] = np.where(below, hi[idx], np.minimum(hi[idx], zi))
        step = -f / ratio
        z_new = zi + step
        outside = ~((z_new >= lo[idx]) & (z_new <= hi[idx]))
        z_new = np.where(outside, 0.5 * (lo[idx] + hi[idx]), z_new)
        z[idx] = z_new
        done = (np.abs(f) < 0.1 * rtol) | (np.abs(z_new - zi) <= 4e-16 * np.abs(zi))
        active[idx[done]] = False
    log_p, ratio = _log_phi_and_ratio(s, z, lam)
    resid = np.abs(np.expm1(log_p - log_y))
    # Rounding of z itself limits the attainable residual when phi is steep.
    floor = 8.0 * np.finfo(float).eps * np.abs(z) * np.abs(ratio)
    if np.any(resid > rtol + floor):
        raise ConvergenceError(f"phi_inverse did not converge (max residual {np.max(resid):.2e})")
    return _as_output(z.reshape(ya.shape), y)


@lru_cache(maxsize=None)
def _coefficient_rows(kmax):
    rows = [[Fraction(1)]]
    for k in range(1, kmax):
        prev = rows[-1]
        row = []
        for j in range(k + 1):
            cur = prev[j] if j < k else Fraction(0)
            left = prev[j - 1] if j >= 1 else Fraction(0)
            row.append(cur - left / k)
        rows.append(row)
    return tuple(tuple(r) for r in rows)


MAX_RECURSION_ORDER = 12


def recursion_coefficients(k):
    """Exact coefficients ``c^k_0 .. c^k_{k-1}`` expressing ``I_k^s`` via ``phi_{s-j}``.

    >>> recursion_coefficients(3)
    (Fraction(1, 1), Fraction(-3, 2), Fraction(1, 2))
    """
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    if k > MAX_RECURSION_ORDER:
        raise OverflowError(f"recursion coefficients are supported up to k = {MAX_RECURSION_ORDER}")
    return _coefficient_rows(int(k))[k - 1]


def fermi_like_integral(stat, k, s, z):
    """Integral ``I_k^s(z) = Gamma(s)^-1 int_0^inf t^(s-1) (e^(t-z)+lam)^-k dt``.

    For ``lam != 0`` this is the combination
    ``lam^(1-k) * sum_j c^k_j phi_{s-j}(z)``; when ``|lam e^z| <= 1/2`` the
    binomial series is summed instead, which avoids the cancellation of that
    combination for small ``lam``.
    """
    lam = float(getattr(stat, "lam", stat))
    za = np.asarray(z, dtype=float)
    coeffs = recursion_coefficients(k)
    if lam == 0.0:
        return _as_output(np.exp(k * za) / float(k) ** s, z)
    out = np.empty_like(za)
    small = za + math.log(abs(lam)) <= math.log(_SERIES_RADIUS)
    if np.any(small):
        zs = za[small]
        w = lam * np.exp(zs)
        total = np.zeros_like(zs)
        binom = 1.0
        for j in range(0, 80):
            total = total + binom * (-w) ** j / float(k + j) ** s
            binom = binom * (k + j) / (j + 1)
        out[small] = np.exp(k * zs) * total
    big = ~small
    if np.any(big):
        zb = za[big]
        total = np.zeros_like(zb)
        for j, c in enumerate(coeffs):
            total = total + float(c) * _phi_raw(s - j, zb, lam)
        out[big] = total / lam ** (k - 1)
    return _as_output(out, z)


def gauss_moment(stat, k, z, order):
    """Momentum moments of ``(exp(|p|^2/2T - z) + lam)^-k`` over R^d.

    Returns a scalar for ``order=0``, a ``(d, d)`` matrix for ``order=2`` and a
    ``(d, d, d, d)`` tensor for ``order=4``. ``z`` must be scalar.
    """
    d = stat.dimension
    T = stat.temperature
    nd = stat.n_d
    if order == 0:
        return nd * fermi_like_integral(stat, k, d / 2.0, z)
    if order == 2:
        return np.eye(d) * nd * T * fermi_like_integral(stat, k, d / 2.0 + 1.0, z)
    if order == 4:
        eye = np.eye(d)
        sym = (
            np.einsum("ij,kl->ijkl", eye, eye)
            + np.einsum("ik,jl->ijkl", eye, eye)
            + np.einsum("il,jk->ijkl", eye, eye)
        )
        return sym * nd * T**2 * fermi_like_integral(stat, k, d / 2.0 + 2.0, z)
    raise DomainError(f"order must be 0, 2 or 4, got {order}")


def critical_density(stat):
    """Largest admissible density; finite only for ``lam < 0`` and ``d >= 3``."""
    if stat.lam < 0 and stat.dimension >= 3:
        return stat.n_d * zeta(stat.half_dim) / abs(stat.lam)
    return math.inf


def phi0_asymptotic(stat, s, n):
    """Leading low-temperature form of ``phi_s(phi_{d/2}^{-1}(n/n_d))``.

    Available for ``lam > 0`` (degenerate Fermi gas) and for ``lam = -1`` with
    ``d`` in {1, 2} and ``s < 1``.
    """
    lam = stat.lam
    d = stat.dimension
    T = stat.temperature
    na = np.asarray(n, dtype=float)
    if lam > 0:
        if _is_integer(s) and s < 0:
            raise UnsupportedBranchError("no degenerate asymptotics for negative integer order")
        base = math.gamma(d / 2.0 + 1.0) * na / stat.n_d
        val = lam ** (2.0 * s / d - 1.0) / math.gamma(s + 1.0) * base ** (2.0 * s / d)
        return _as_output(val, n)
    if lam == -1.0 and d in (1, 2):
        if not s < 1:
            raise UnsupportedBranchError("Bose-Einstein asymptotics need s < 1")
        if d == 2:
            val = math.gamma(1.0 - s) * np.exp((1.0 - s) * na / (2.0 * math.pi * T))
        else:
            val = math.gamma(1.0 - s) * (na**2 / (2.0 * math.pi**2 * T)) ** (1.0 - s)
        return _as_output(val, n)
    raise UnsupportedBranchError(f"no low-temperature asymptotics for lam={lam}, d={d}")
