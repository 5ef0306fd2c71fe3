"""Maximum-entropy closure: chemical potential, Bohm potential, pressure.

Everything here is a function of the density ``n`` through the inverse
``z = phi_{d/2}^{-1}(n / n_d)``. :class:`DensityClosure` computes ``z`` once
per node and serves every ``phi_s(z)`` that the fluid equations need, so
that the expensive inversion is never repeated within one evaluation.

Short names used below, with ``s = d/2`` and ``phi^0_k = phi_k(z)``:

* ``a(n) = phi^0_{s-2} / (n_d (phi^0_{s-1})^2)``
* ``b(n) = phi^0_{s-3} / (n_d^2 (phi^0_{s-1})^3) - 2 (phi^0_{s-2})^2 / (n_d^2 (phi^0_{s-1})^4)``

so that ``Q = -(2 a lap(n) + b |grad n|^2) / 24``. One checks ``b = da/dn``,
hence ``Q`` is the variational derivative of ``int a |grad n|^2 / 24``.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from . import specfun
from .exceptions import DomainError, SupercriticalError
from .fields import N_FLOOR

__all__ = [
    "SUPERCRITICAL_MARGIN",
    "DensityClosure",
    "DegenerateCoefficients",
    "check_subcritical",
    "phi0",
    "multipliers_order0",
    "multipliers_order2",
    "bohm_coefficients",
    "bohm_potential",
    "bohm_potential_pointwise",
    "bohm_bracket_multiplier_form",
    "pressure_coefficient",
    "pressure",
    "degenerate_coefficients",
    "critical_temperature",
    "classical_bohm",
    "tabulate",
]

SUPERCRITICAL_MARGIN = 1e-6


def check_subcritical(stat, n):
    """Raise :class:`SupercriticalError` at the first node too close to condensation."""
    crit = specfun.critical_density(stat)
    if not math.isfinite(crit):
        return
    limit = (1.0 - SUPERCRITICAL_MARGIN) * crit
    na = np.asarray(n)
    bad = na > limit
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(np.atleast_1d(bad))[0])
        if na.ndim == 0:
            idx = ()
        raise SupercriticalError(
            f"density {float(np.max(na)):.6g} at node {idx} exceeds the Bose-Einstein "
            f"bound {crit:.6g} (lambda={stat.lam}, T={stat.temperature}, d={stat.dimension})",
            index=idx,
        )


class DensityClosure:
    """Per-node closure data for a density field.

    Parameters
    ----------
    stat : Statistics
    n : array_like
        Density; values below :data:`fields.N_FLOOR` are clamped.
    """

    def __init__(self, stat, n):
        self.stat = stat
        na = np.asarray(n, dtype=float)
        if np.any(~np.isfinite(na)):
            raise DomainError("density contains non-finite values")
        self.clamped = int(np.count_nonzero(na < N_FLOOR))
        self.n = np.maximum(na, N_FLOOR)
        check_subcritical(stat, self.n)
        self.z = np.asarray(specfun.phi_inverse(stat, self.n / stat.n_d), dtype=float)
        self._cache = {}

    def phi0(self, s):
        """``phi_s(z)``; the order ``d/2`` returns ``n / n_d`` without rounding."""
        s = float(s)
        if s == self.stat.half_dim:
            return self.n / self.stat.n_d
        if s not in self._cache:
            if self.stat.lam == 0.0:
                self._cache[s] = self.n / self.stat.n_d
            else:
                self._cache[s] = np.asarray(specfun.phi(self.stat, s, self.z), dtype=float)
        return self._cache[s]

    @property
    def A0(self):
        return self.stat.temperature * self.z

    @property
    def pressure_coefficient(self):
        """``T / (n_d phi^0_{d/2-1})``, the factor of ``n grad n``."""
        st = self.stat
        return st.temperature / (st.n_d * self.phi0(st.half_dim - 1.0))

    @property
    def pressure(self):
        """Isothermal pressure ``p(n) = T n_d phi^0_{d/2+1}`` with ``dp/dn = n * coefficient``."""
        st = self.stat
        return st.temperature * st.n_d * self.phi0(st.half_dim + 1.0)

    def bohm_coefficients(self):
        """The pair ``(a, b)`` of the module docstring."""
        st = self.stat
        s = st.half_dim
        nd = st.n_d
        p1 = self.phi0(s - 1.0)
        # ratios keep the strongly degenerate Bose case (phi ~ e^{n/2piT}) in range
        r2 = self.phi0(s - 2.0) / p1
        r3 = self.phi0(s - 3.0) / p1
        scale = nd * p1
        a = r2 / scale
        b = (r3 - 2.0 * r2**2) / scale**2
        return a, b

    def rotational_weights(self):
        """``(W, G)`` with ``W = n_d phi^0_{s-1}/(12T)`` and ``G = phi^0_{s-2}/(48 T phi^0_{s-1})``."""
        st = self.stat
        s = st.half_dim
        T = st.temperature
        p1 = self.phi0(s - 1.0)
        p2 = self.phi0(s - 2.0)
        return st.n_d * p1 / (12.0 * T), p2 / (48.0 * T * p1)


def phi0(stat, s, n):
    """``phi_s(phi_{d/2}^{-1}(n / n_d))``."""
    out = DensityClosure(stat, n).phi0(s)
    return float(out) if np.ndim(n) == 0 else out


def multipliers_order0(stat, n, J):
    """Leading-order multipliers ``A0 = T phi_{d/2}^{-1}(n/n_d)`` and ``B0 = J/n``."""
    cl = DensityClosure(stat, n)
    B0 = np.asarray(J, dtype=float) / cl.n
    return cl.A0, B0


def bohm_potential_pointwise(stat, n, lap_n, grad_n_sq):
    """Modified Bohm potential from nodal ``n``, ``lap(n)`` and ``|grad n|^2``."""
    a, b = DensityClosure(stat, n).bohm_coefficients()
    return -(2.0 * a * np.asarray(lap_n) + b * np.asarray(grad_n_sq)) / 24.0


def bohm_coefficients(stat, n):
    return DensityClosure(stat, n).bohm_coefficients()


def _bohm_from(grid, cl):
    a, b = cl.bohm_coefficients()
    grad = grid.gradient(cl.n)
    return -(2.0 * a * grid.laplacian(cl.n) + b * np.sum(grad**2, axis=0)) / 24.0


def bohm_potential(stat, grid, n):
    """Modified Bohm potential ``Q(n)`` on a grid (compact Laplacian, central gradient)."""
    return _bohm_from(grid, DensityClosure(stat, n))


def bohm_bracket_multiplier_form(stat, grid, n):
    """``-Q`` times 24 evaluated through ``A0`` instead of ``n``; for consistency checks."""
    cl = DensityClosure(stat, n)
    T = stat.temperature
    s = stat.half_dim
    A0 = cl.A0
    gA = grid.gradient(A0)
    p1, p2, p3 = cl.phi0(s - 1.0), cl.phi0(s - 2.0), cl.phi0(s - 3.0)
    return 2.0 * grid.laplacian(A0) / T * p2 / p1 + np.sum(gA**2, axis=0) / T**2 * p3 / p1


def classical_bohm(grid, n):
    """``lap(sqrt n) / sqrt n`` with the compact Laplacian."""
    r = np.sqrt(np.maximum(n, N_FLOOR))
    return grid.laplacian(r) / r


def multipliers_order2(stat, grid, n, u):
    """Second-order corrections ``(A2, B2)`` of the Lagrange multipliers.

    Parameters
    ----------
    stat : Statistics
    grid : fields.Grid
    n : ndarray
        Density, shape ``grid.shape``.
    u : ndarray
        Velocity, shape ``(d, *grid.shape)``.
    """
    cl = DensityClosure(stat, n)
    T = stat.temperature
    s = stat.half_dim
    u = np.asarray(u, dtype=float)
    d = grid.dimension
    du = np.stack([grid.gradient(u[j]) for j in range(d)])  # du[j, k] = d_k u_j
    R = grid.curl_tensor(u)  # R[j, k] = d_k u_j - d_j u_k
    p1 = cl.phi0(s - 1.0)
    p2 = cl.phi0(s - 2.0)
    shear = np.einsum("jk...,jk...->...", du, R)
    A2 = shear * p2 / (24.0 * T * p1) + _bohm_from(grid, cl)
    B2 = np.zeros_like(u)
    for i in range(d):
        flux = np.stack([R[j, i] * p1 for j in range(d)])
        B2[i] = stat.n_d / (12.0 * T * cl.n) * grid.divergence(flux)
    return A2, B2


def pressure_coefficient(stat, n):
    """``T / (n_d phi^0_{d/2-1}(n))``."""
    out = DensityClosure(stat, n).pressure_coefficient
    return float(out) if np.ndim(n) == 0 else out


def pressure(stat, n):
    out = DensityClosure(stat, n).pressure
    return float(out) if np.ndim(n) == 0 else out


class DegenerateCoefficients(NamedTuple):
    gamma1: float
    gamma2: float
    gamma3: float
    gamma4: float


def degenerate_coefficients(d):
    """Coefficients of the completely degenerate Fermi-Dirac equations."""
    if d not in (1, 2, 3):
        raise DomainError(f"dimension must be 1, 2 or 3, got {d}")
    h = d / 2.0
    g1 = (1.0 / (2.0 * math.pi)) * (d / (d + 2.0)) * h ** ((2.0 - d) / d) * math.gamma(h) ** (2.0 / d)
    g2 = (d - 2.0) / (6.0 * d)
    gp = math.gamma(h + 1.0) ** (2.0 / d)
    g3 = d * math.pi / (12.0 * gp)
    g4 = (d - 2.0) * math.pi / (48.0 * gp)
    return DegenerateCoefficients(g1, g2, g3, g4)


def critical_temperature(stat, n):
    """Temperature below which density ``n`` would condense (``lam < 0``, ``d >= 3``)."""
    if not (stat.lam < 0 and stat.dimension >= 3):
        raise DomainError("a critical temperature exists only for lam < 0 and d >= 3")
    d = stat.dimension
    return (abs(stat.lam) * np.asarray(n, dtype=float) / specfun.zeta(d / 2.0)) ** (2.0 / d) / (2.0 * math.pi)


def tabulate(stat, densities):
    """Columns ``n, A0, pressure_coefficient, a, b`` over a density range."""
    cl = DensityClosure(stat, densities)
    a, b = cl.bohm_coefficients()
    return {
        "n": cl.n,
        "A0": cl.A0,
        "pressure_coefficient": cl.pressure_coefficient,
        "bohm_a": a,
        "bohm_b": b,
    }
