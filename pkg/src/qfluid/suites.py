"""Self-check suites run by ``qfluid verify``.

Each suite compares a production path against an independent oracle
(scipy quadrature, exact rationals, closed forms or a conservation law)
and returns a :class:`SuiteResult`. The suites are sized to finish in a
few seconds; the full acceptance tests live in the test suite.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy import integrate, special

from . import closure, equilibrium, solvers, specfun
from .exceptions import SupercriticalError
from .fields import Grid

__all__ = ["SuiteResult", "run_all", "analytic_fields"]


class SuiteResult(NamedTuple):
    name: str
    metric: float
    tolerance: float
    passed: bool


def _result(name, metric, tolerance):
    return SuiteResult(name, float(metric), float(tolerance), bool(metric <= tolerance))


def analytic_fields(lam=1.0):
    """Smooth trigonometric multipliers ``(A, B)`` on ``d = 2`` used by the oracle suites."""
    c = -1.0 if lam < 0 else 0.3
    A = equilibrium.TrigField(c, (0.4, 0.2), ((1.0, 0.0), (1.0, 1.0)), (0.1, 0.7))
    B = (
        equilibrium.TrigField(0.2, (0.3,), ((0.0, 1.0),), (0.3,)),
        equilibrium.TrigField(-0.1, (0.25, 0.1), ((1.0, 0.0), (1.0, -1.0)), (0.5, 0.2)),
    )
    return A, B


def _fermi_oracle(s, z, lam):
    def f(t):
        return t ** (s - 1.0) / (math.exp(t - z) + lam) if t - z < 700 else 0.0

    pts = [max(z, 0.0)] if z > 0 else None
    val, _ = integrate.quad(f, 0.0, max(z, 0.0) + 60.0, points=pts, limit=400, epsabs=0.0, epsrel=1e-13)
    return val / math.gamma(s)


def suite_specfun():
    worst = 0.0
    for lam in (1.0, -1.0, 0.5, -0.5):
        stat = specfun.Statistics(lam, 1.0, 3)
        zs = (-3.0, -0.5, 2.0, 12.0) if lam > 0 else (-4.0, -1.0, -0.1)
        for s in (1.5, 2.5, 3.5):
            for z in zs:
                got = specfun.phi(stat, s, z)
                ref = _fermi_oracle(s, z, lam)
                worst = max(worst, abs(got / ref - 1.0))
    return _result("specfun_phi_vs_quadrature", worst, 1e-8)


def suite_recursion():
    expected = {
        1: [Fraction(1)],
        2: [Fraction(1), Fraction(-1)],
        3: [Fraction(1), Fraction(-3, 2), Fraction(1, 2)],
        4: [Fraction(1), Fraction(-11, 6), Fraction(1), Fraction(-1, 6)],
    }
    bad = sum(list(specfun.recursion_coefficients(k)) != row for k, row in expected.items())
    return _result("recursion_rows_exact", bad, 0)


def suite_moments():
    worst = 0.0
    for d in (1, 2):
        stat = specfun.Statistics(1.0, 1.0, d)
        z = 0.7

        def g0(p):
            h = np.sum(p**2, axis=0) / 2.0 - z
            return special.expit(-h)

        for order in (0, 2):
            q = np.asarray(equilibrium.moment_quadrature(g0, d, order, z=z))
            ref = np.asarray(specfun.gauss_moment(stat, 1, z, order))
            mask = np.abs(ref) > 0
            worst = max(worst, float(np.max(np.abs(q[mask] / ref[mask] - 1.0))))
    return _result("momentum_moments_vs_closed_form", worst, 1e-8)


def suite_lemma():
    stat = specfun.Statistics(1.0, 1.0, 2)
    sym = equilibrium.EquilibriumSymbol(stat, *analytic_fields())
    x = np.array([0.4, 1.1])
    g2, pg2 = equilibrium.lemma_moments(sym, x)
    z = float(sym.A.value(x[:, None])[0])
    Bv = np.array([float(b.value(x[:, None])[0]) for b in sym.B])

    def f(p):
        return sym.g2(x[:, None], p)

    q0 = equilibrium.moment_quadrature(f, 2, 0, center=Bv, z=z)
    q1 = equilibrium.moment_quadrature(f, 2, 1, center=Bv, z=z)
    err = max(abs(q0 / g2 - 1.0), float(np.max(np.abs(q1 / pg2 - 1.0))))
    return _result("second_order_moments_vs_quadrature", err, 1e-7)


def moyal_residual_curve(lam=1.0, eps_values=(0.2, 0.1, 0.05, 0.025)):
    stat = specfun.Statistics(lam, 1.0, 2)
    sym = equilibrium.EquilibriumSymbol(stat, *analytic_fields(lam))
    xs = np.array([[0.4, 2.0, 3.0], [1.1, 0.5, -1.0]])
    ps = np.array([[0.3, -0.5, 1.0], [0.2, 0.8, -0.4]])
    return [(e, float(np.max(np.abs(equilibrium.moyal_residual(sym, xs, ps, e))))) for e in eps_values]


def suite_moyal():
    curve = dict(moyal_residual_curve())
    ratio = curve[0.1] / curve[0.05]
    return _result("moyal_residual_order4_ratio_offset", abs(ratio - 16.0), 3.0), list(curve.items())


def suite_mb_collapse():
    n = np.linspace(0.2, 3.0, 17)
    worst = 0.0
    for d in (1, 2, 3):
        near = specfun.Statistics(1e-6, 1.0, d)
        mb = specfun.Statistics(0.0, 1.0, d)
        a0, b0 = closure.bohm_coefficients(mb, n)
        a1, b1 = closure.bohm_coefficients(near, n)
        pairs = [
            (closure.pressure_coefficient(near, n), closure.pressure_coefficient(mb, n), 0.0),
            (a1, a0, 0.0),
            (b1, b0, 0.0),
            # A0 = T log(n / n_d) changes sign, so it is measured on the scale T
            (closure.multipliers_order0(near, n, 0 * n)[0], closure.multipliers_order0(mb, n, 0 * n)[0], 1.0),
        ]
        for got, ref, floor in pairs:
            worst = max(worst, float(np.max(np.abs(got - ref) / np.maximum(np.abs(ref), floor))))
    return _result("mb_collapse_closure", worst, 1e-5)


def degenerate_errors(d, T, n):
    """Relative errors of the pressure coefficient and of ``(a, b)`` against the degenerate forms.

    For ``d = 2`` the degenerate ``(a, b)`` vanish, so the errors are scaled
    by ``1/n`` and ``1/n^2`` instead.
    """
    stat = specfun.Statistics(1.0, T, d)
    g = closure.degenerate_coefficients(d)
    pc = closure.pressure_coefficient(stat, n)
    pc_ref = g.gamma1 * (d + 2.0) / d * n ** ((2.0 - d) / d)
    a, b = closure.bohm_coefficients(stat, n)
    r = (d - 2.0) / d
    scale_a = np.abs(r / n) if d != 2 else 1.0 / n
    scale_b = np.abs(r / n**2) if d != 2 else 1.0 / n**2
    return (
        float(np.max(np.abs(pc / pc_ref - 1.0))),
        float(np.max(np.abs(a - r / n) / scale_a)),
        float(np.max(np.abs(b + r / n**2) / scale_b)),
    )


def suite_degenerate():
    n = np.linspace(0.5, 2.0, 7)
    worst = max(max(degenerate_errors(d, 1e-4, n)) for d in (1, 2, 3))
    return _result("fd_degenerate_limit_T1e-4", worst, 1e-2)


def suite_conservation():
    grid = Grid(1, 64, 2.0 * math.pi)
    (x,) = grid.coordinates()
    stat = specfun.Statistics(0.0, 1.0, 1)
    regime = solvers.RegimeSpec("mb", "hydro", 0.1, stat, grid)
    state = solvers.FluidState(0.0, 1.0 + 0.3 * np.cos(x), (0.2 * np.sin(2 * x))[None])
    d0 = solvers.diagnostics(state, regime)
    d1 = solvers.diagnostics(solvers.run_steps(state, regime, 200), regime)
    drift = max(abs(d1.mass / d0.mass - 1.0), abs(d1.momentum[0] - d0.momentum[0]) / d0.mass)
    return _result("mass_momentum_drift_200_steps", drift, 1e-12)


def suite_be_guard():
    stat = specfun.Statistics(-1.0, 0.7, 3)
    crit = specfun.critical_density(stat)
    Tc = float(closure.critical_temperature(stat, crit))
    err = abs(Tc / stat.temperature - 1.0)
    try:
        closure.DensityClosure(stat, np.array([0.5 * crit, 1.01 * crit]))
    except SupercriticalError:
        pass
    else:
        err = math.inf
    return _result("be_critical_guard_consistency", err, 1e-10)


def run_all():
    """Run every suite; returns ``(results, moyal_curve)``."""
    results = [suite_specfun(), suite_recursion(), suite_moments(), suite_lemma()]
    moyal, curve = suite_moyal()
    results.append(moyal)
    results += [suite_mb_collapse(), suite_degenerate(), suite_conservation(), suite_be_guard()]
    return results, curve
