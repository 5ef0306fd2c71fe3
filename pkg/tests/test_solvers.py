import math

import numpy as np
import pytest

from qfluid import closure, solvers, specfun
from qfluid.exceptions import DomainError, NumericalAbort
from qfluid.fields import Grid
from qfluid.solvers import FluidState, RegimeSpec
from qfluid.specfun import Statistics

G1 = Grid(1, 128, 2 * math.pi)
G2 = Grid(2, 32, 2 * math.pi)


def smooth_state(grid, hydro=True, amp=0.2):
    coords = grid.coordinates()
    x = coords[0]
    n = 1 + 0.3 * np.cos(x) * (np.sin(coords[1]) if grid.dimension == 2 else 1)
    if not hydro:
        return FluidState(0.0, n)
    S = amp * np.sin(x + 0.4) * (np.cos(coords[1]) if grid.dimension == 2 else 1)
    return FluidState(0.0, n, n * grid.gradient(S))


def rel(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(b))


REGIME_CASES = [
    ("general", 1.0, 1), ("general", -1.0, 2), ("mb", 0.0, 1), ("mb", 0.0, 2),
    ("degenerate-fd", 1.0, 2), ("be-d1", -1.0, 1), ("be-d2", -1.0, 2), ("madelung", 0.0, 1),
]


@pytest.mark.parametrize("kind,lam,d", REGIME_CASES)
def test_uniform_state_is_stationary(kind, lam, d):
    grid = G1 if d == 1 else G2
    stat = Statistics(lam, 1.0, d)
    r = RegimeSpec(kind, "hydro", 0.2, stat, grid)
    dn, dJ = solvers.hydro_rhs(FluidState(0.0, np.full(grid.shape, 0.8), np.zeros((d,) + grid.shape)), r)
    assert np.max(np.abs(dn)) == 0 and np.max(np.abs(dJ)) < 1e-14
    if kind != "madelung":
        rd = RegimeSpec(kind, "diffusive", 0.2, stat, grid)
        assert np.max(np.abs(solvers.diffusion_rhs(FluidState(0.0, np.full(grid.shape, 0.8)), rd))) < 1e-14


def test_regime_validation():
    with pytest.raises(DomainError):
        RegimeSpec("madelung", "diffusive", 0.1, Statistics(0.0, 1.0, 1), G1)
    with pytest.raises(DomainError):
        RegimeSpec("madelung", "hydro", 0.1, Statistics(0.0, 1.0, 2), G2)
    with pytest.raises(DomainError):
        RegimeSpec("be-d2", "hydro", 0.1, Statistics(-1.0, 1.0, 1), G1)
    with pytest.raises(DomainError):
        RegimeSpec("mb", "hydro", 0.1, Statistics(1.0, 1.0, 1), G1)
    with pytest.raises(DomainError):
        RegimeSpec("general", "hydro", 0.1, Statistics(1.0, 1.0, 2), G1)
    with pytest.raises(DomainError):
        RegimeSpec("general", "sideways", 0.1, Statistics(1.0, 1.0, 1), G1)
    with pytest.raises(DomainError):
        RegimeSpec("general", "hydro", 0.1, Statistics(1.0, 1.0, 1), G1, potential=np.zeros(3))


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("model", ["hydro", "diffusive"])
def test_general_collapses_to_mb(d, model):
    grid = G1 if d == 1 else G2
    s = smooth_state(grid, model == "hydro")
    V = 0.2 * np.cos(grid.coordinates()[0])
    mb = RegimeSpec("mb", model, 0.3, Statistics(0.0, 1.0, d), grid, V)
    gen = RegimeSpec("general", model, 0.3, Statistics(1e-6, 1.0, d), grid, V)
    if model == "hydro":
        for a, b in zip(solvers.hydro_rhs(s, gen), solvers.hydro_rhs(s, mb)):
            assert rel(a, b) < 1e-5
    else:
        assert rel(solvers.diffusion_rhs(s, gen), solvers.diffusion_rhs(s, mb)) < 1e-5


def test_mb_stationary_profile_momentum_rhs_is_second_order():
    errs = []
    for N in (64, 128):
        g = Grid(1, N, 2 * math.pi)
        (x,) = g.coordinates()
        V = 0.5 * np.cos(x)
        n = np.exp(-V)
        r = RegimeSpec("mb", "hydro", 0.0, Statistics(0.0, 1.0, 1), g, V)
        _, dJ = solvers.hydro_rhs(FluidState(0.0, n, np.zeros((1, N))), r)
        errs.append(np.max(np.abs(dJ)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_general_tends_to_degenerate_fd():
    s = smooth_state(G1)
    ref = solvers.hydro_rhs(s, RegimeSpec("degenerate-fd", "hydro", 0.3, Statistics(1.0, 1.0, 1), G1))
    errs = []
    for T in (1e-2, 1e-3, 1e-4):
        got = solvers.hydro_rhs(s, RegimeSpec("general", "hydro", 0.3, Statistics(1.0, T, 1), G1))
        errs.append(rel(got[1], ref[1]))
    assert errs[0] / errs[1] >= 5 and errs[1] / errs[2] >= 5


def test_general_tends_to_bose_d1():
    s = smooth_state(G1)
    ref = solvers.hydro_rhs(s, RegimeSpec("be-d1", "hydro", 0.3, Statistics(-1.0, 1.0, 1), G1))
    errs = [rel(solvers.hydro_rhs(s, RegimeSpec("general", "hydro", 0.3, Statistics(-1.0, T, 1), G1))[1], ref[1])
            for T in (1e-2, 1e-3, 1e-4)]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-2


def test_general_matches_bose_d2_rescaled():
    g = Grid(2, 64, 2 * math.pi)
    s = smooth_state(g)
    stat = Statistics(-1.0, 1e-3, 2)
    ref = solvers.hydro_rhs(s, RegimeSpec("be-d2", "hydro", 0.3, stat, g))
    got = solvers.hydro_rhs(s, RegimeSpec("general", "hydro", 0.3, stat, g))
    assert rel(got[1], ref[1]) < 0.05


@pytest.mark.parametrize("kind,lam,d", [("general", 1.0, 1), ("mb", 0.0, 2), ("be-d2", -1.0, 2), ("be-d1", -1.0, 1)])
def test_diffusion_rhs_sums_to_zero(kind, lam, d):
    grid = G1 if d == 1 else G2
    r = RegimeSpec(kind, "diffusive", 0.2, Statistics(lam, 1.0, d), grid, 0.3 * np.sin(grid.coordinates()[0]))
    s = smooth_state(grid, hydro=False)
    dn = solvers.diffusion_rhs(s, r)
    assert abs(np.sum(dn)) <= 1e-13 * np.sum(np.abs(dn))


def test_step_zero_is_identity():
    r = RegimeSpec("mb", "hydro", 0.1, Statistics(0.0, 1.0, 1), G1)
    s = smooth_state(G1)
    out = solvers.step(s, r, 0.0)
    np.testing.assert_array_equal(out.n, s.n)
    np.testing.assert_array_equal(out.J, s.J)


def test_rk4_fourier_mode_local_error_is_fifth_order():
    # with the logarithmic face mean, MB diffusion at eps = 0 is exactly the discrete heat equation
    g = Grid(1, 32, 2 * math.pi)
    (x,) = g.coordinates()
    r = RegimeSpec("mb", "diffusive", 0.0, Statistics(0.0, 1.0, 1), g)
    k = 3
    rate = -(2 - 2 * math.cos(k * g.spacing)) / g.spacing**2
    errs = []
    for dt in (0.02, 0.01):
        n0 = 1 + 1e-3 * np.cos(k * x)
        n1 = solvers.step(FluidState(0.0, n0), r, dt).n
        exact = 1 + 1e-3 * math.exp(rate * dt) * np.cos(k * x)
        errs.append(np.max(np.abs(n1 - exact)))
    assert errs[0] / errs[1] == pytest.approx(32.0, rel=0.15)


@pytest.mark.parametrize("model", ["hydro", "diffusive"])
def test_mass_conserved_per_step(model):
    r = RegimeSpec("general", model, 0.1, Statistics(1.0, 1.0, 2), G2, 0.2 * np.cos(G2.coordinates()[1]))
    s = smooth_state(G2, model == "hydro")
    m0 = G2.integrate(s.n)
    s = solvers.run_steps(s, r, 20)
    assert abs(G2.integrate(s.n) / m0 - 1) < 1e-13


def test_primitive_regime_keeps_gradient_velocity_curl_free():
    g = Grid(2, 32, 2 * math.pi)
    r = RegimeSpec("be-d2", "hydro", 0.3, Statistics(-1.0, 0.1, 2), g)
    s = solvers.run_steps(smooth_state(g), r, 20)
    assert solvers.diagnostics(s, r).max_abs_curl < 1e-12


def test_integrate_schedule_and_zero_time():
    r = RegimeSpec("mb", "diffusive", 0.0, Statistics(0.0, 1.0, 1), G1)
    s = smooth_state(G1, hydro=False)
    assert len(solvers.integrate(s, r, 0.0)) == 1
    out = solvers.integrate(s, r, 0.05, output_times=[0.01, 0.02])
    assert [o[0] for o in out] == [0.0, 0.01, 0.02, 0.05]


def test_abort_on_nan_and_growth():
    r = RegimeSpec("mb", "diffusive", 0.0, Statistics(0.0, 1.0, 1), G1)
    n = np.ones(G1.shape)
    n[3] = np.nan
    with pytest.raises(NumericalAbort):
        solvers.step(FluidState(0.0, n), r, 1e-3)
    s = smooth_state(G1, hydro=False)
    with pytest.raises(NumericalAbort) as info:
        solvers.run_steps(s, r, 50, dt=100 * solvers.stable_timestep(s, r))
    assert info.value.step is not None


def test_diagnostics_uniform_momentum():
    r = RegimeSpec("mb", "hydro", 0.1, Statistics(0.0, 1.0, 2), G2)
    n = np.full(G2.shape, 2.0)
    J = np.stack([n * 0.5, n * -0.25])
    d = solvers.diagnostics(FluidState(0.0, n, J), r)
    vol = G2.length**2
    assert d.mass == pytest.approx(2 * vol)
    assert d.momentum == pytest.approx((2 * 0.5 * vol, -2 * 0.25 * vol))
    assert d.max_abs_curl == 0 and not d.supercritical


def test_supercritical_flag_three_dimensional_closure_path():
    stat = Statistics(-1.0, 1.0, 3)
    crit = specfun.critical_density(stat)
    assert solvers.supercritical_flag(stat, np.array([0.5, 1.0 * crit]))
    assert not solvers.supercritical_flag(stat, np.array([0.5 * crit]))
    assert not solvers.supercritical_flag(Statistics(-1.0, 1.0, 2), np.array([1e6]))


def test_schrodinger_plane_wave():
    g = Grid(1, 64, 2 * math.pi)
    (x,) = g.coordinates()
    eps = 0.5
    psi = np.exp(1j * 2 * x / eps)
    n, u, _ = solvers.schrodinger_reference(g, psi, None, eps, 0.3)
    np.testing.assert_allclose(n, 1.0, atol=1e-12)
    # discrete momentum eps * k with k on the grid
    k = 2 / eps
    np.testing.assert_allclose(u[0], eps * k, rtol=1e-10)


def test_schrodinger_free_gaussian_width_and_norm():
    L, eps, s0, t = 16.0, 0.5, 1.0, 1.0
    g = Grid(1, 256, L)
    x = g.axis() - L / 2
    psi = (2 * math.pi * s0**2) ** -0.25 * np.exp(-(x**2) / (4 * s0**2))
    n, _, out = solvers.schrodinger_reference(g, psi, None, eps, t, steps=1000)
    m = g.integrate(n)
    assert abs(m - g.integrate(np.abs(psi) ** 2)) < 1e-12
    width = math.sqrt(g.integrate(x**2 * n) / m)
    assert width == pytest.approx(math.sqrt(s0**2 + (eps * t / (2 * s0)) ** 2), rel=1e-6)


def test_schrodinger_requires_one_dimension():
    with pytest.raises(DomainError):
        solvers.schrodinger_reference(G2, np.ones(G2.shape), None, 0.5, 1.0)


def test_closure_floor_reported():
    r = RegimeSpec("mb", "diffusive", 0.0, Statistics(0.0, 1.0, 1), G1)
    n = np.ones(G1.shape)
    n[0] = 0.0
    assert solvers.diagnostics(FluidState(0.0, n), r).clamped == 1
    assert closure.DensityClosure(Statistics(1.0, 1.0, 1), n).clamped == 1
