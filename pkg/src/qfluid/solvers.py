"""Time integration of the semiclassical fluid equations.

Two models are provided for each regime:

* hydrodynamic: density ``n`` and current ``J``;
* diffusive: density only, ``dn/dt = div(n grad(mu(n) + V + eps^2 Q))``.

The general, Maxwell-Boltzmann and degenerate Fermi-Dirac hydrodynamic
regimes evolve ``(n, J)`` in conservative form. The quantum force
``n grad Q`` is written as the divergence of a Korteweg-type stress, and the
pressure term as ``grad p(n)``, so that total momentum is conserved by the
telescoping central divergence. The Madelung and zero-temperature
Bose-Einstein regimes evolve ``(n, u)`` with ``du/dt = -grad(|u|^2/2 + V + psi)``
which keeps a discrete gradient velocity field exactly curl-free.

Time stepping is classical RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import closure, specfun
from .exceptions import DomainError, NumericalAbort
from .fields import N_FLOOR, Grid

__all__ = [
    "REGIMES",
    "MODELS",
    "RegimeSpec",
    "validate_regime",
    "FluidState",
    "Diagnostics",
    "hydro_rhs",
    "diffusion_rhs",
    "stable_timestep",
    "step",
    "run_steps",
    "integrate",
    "diagnostics",
    "supercritical_flag",
    "schrodinger_reference",
    "COURANT",
]

REGIMES = ("general", "mb", "degenerate-fd", "be-d2", "be-d1", "madelung")
MODELS = ("hydro", "diffusive")
PRIMITIVE = ("madelung", "be-d1", "be-d2")
COURANT = 0.4
GROWTH_LIMIT = 10.0
CURL_ROUNDING = 64.0 * np.finfo(float).eps


def validate_regime(kind, model, eps, stat):
    """Reject regime/model/statistics combinations without touching any field data."""
    if kind not in REGIMES:
        raise DomainError(f"unknown regime {kind!r}; choose from {REGIMES}")
    if model not in MODELS:
        raise DomainError(f"unknown model {model!r}; choose from {MODELS}")
    if not eps >= 0:
        raise DomainError("eps must be non-negative")
    d = stat.dimension
    lam = stat.lam
    if kind == "madelung" and model != "hydro":
        raise DomainError("the Madelung regime is hydrodynamic only")
    if kind in ("madelung", "be-d1") and d != 1:
        raise DomainError(f"regime {kind} requires d = 1")
    if kind == "be-d2" and d != 2:
        raise DomainError("regime be-d2 requires d = 2")
    if kind in ("be-d1", "be-d2") and lam != -1.0:
        raise DomainError(f"regime {kind} requires Bose-Einstein statistics (lambda = -1)")
    if kind == "degenerate-fd" and lam != 1.0:
        raise DomainError("regime degenerate-fd requires Fermi-Dirac statistics (lambda = 1)")
    if kind == "mb" and lam != 0.0:
        raise DomainError("regime mb requires Maxwell-Boltzmann statistics (lambda = 0)")


@dataclass(frozen=True)
class RegimeSpec:
    """Equations to integrate.

    Parameters
    ----------
    kind : str
        One of :data:`REGIMES`.
    model : str
        ``'hydro'`` or ``'diffusive'``.
    eps : float
        Scaled Planck constant.
    stat : specfun.Statistics
    grid : fields.Grid
    potential : ndarray, optional
        External potential ``V``; zero when omitted.
    """

    kind: str
    model: str
    eps: float
    stat: specfun.Statistics
    grid: Grid
    potential: np.ndarray = field(default=None, compare=False)

    def __post_init__(self):
        if self.stat.dimension != self.grid.dimension:
            raise DomainError("statistics and grid dimensions differ")
        validate_regime(self.kind, self.model, self.eps, self.stat)
        if self.potential is None:
            object.__setattr__(self, "potential", np.zeros(self.grid.shape))
        else:
            V = np.asarray(self.potential, dtype=float)
            if V.shape != self.grid.shape:
                raise DomainError(f"potential shape {V.shape} does not match grid {self.grid.shape}")
            object.__setattr__(self, "potential", V)

    @property
    def primitive(self):
        return self.kind in PRIMITIVE


@dataclass
class FluidState:
    """Density and (for hydrodynamics) current at time ``time``."""

    time: float
    n: np.ndarray
    J: np.ndarray | None = None

    def copy(self):
        return FluidState(self.time, self.n.copy(), None if self.J is None else self.J.copy())

    def velocity(self):
        if self.J is None:
            return None
        return self.J / np.maximum(self.n, N_FLOOR)


@dataclass(frozen=True)
class Diagnostics:
    time: float
    mass: float
    momentum: tuple
    max_abs_curl: float
    min_density: float
    supercritical: bool
    clamped: int = 0

    def row(self):
        return [self.time, self.mass, *self.momentum, self.max_abs_curl, self.min_density, int(self.supercritical)]


# ---------------------------------------------------------------------------
# Constitutive data per regime


@dataclass
class _Local:
    """Nodal constitutive functions of ``n`` for one regime."""

    n: np.ndarray
    pressure: np.ndarray  # p(n), zero for the primitive regimes
    sound2: np.ndarray  # dp/dn
    chem: np.ndarray  # mu(n) with n grad mu = grad p
    a: np.ndarray | None  # Bohm coefficients, Q = -(2 a lap n + b |grad n|^2)/24
    b: np.ndarray | None
    W: np.ndarray | None  # rotational weights
    G: np.ndarray | None
    clamped: int = 0


def _local(regime, n):
    """Constitutive data; the eps^2 coefficients are skipped when ``eps = 0``."""
    st = regime.stat
    quantum = regime.eps > 0
    d = st.dimension
    T = st.temperature
    zero = np.zeros_like(n)
    kind = regime.kind
    if kind == "general":
        cl = closure.DensityClosure(st, n)
        a, b = cl.bohm_coefficients() if quantum else (None, None)
        W, G = cl.rotational_weights() if quantum and d > 1 else (None, None)
        pc = cl.pressure_coefficient
        return _Local(cl.n, cl.pressure, pc * cl.n, cl.A0, a, b, W, G, cl.clamped)
    clamped = int(np.count_nonzero(n < N_FLOOR))
    n = np.maximum(n, N_FLOOR)
    if kind == "mb":
        return _Local(n, T * n, np.full_like(n, T), T * np.log(n), 1.0 / n, -1.0 / n**2,
                      n / (12.0 * T), np.full_like(n, 1.0 / (48.0 * T)), clamped)
    if kind == "degenerate-fd":
        g = closure.degenerate_coefficients(d)
        r = (d - 2.0) / d
        return _Local(
            n,
            g.gamma1 * n ** ((d + 2.0) / d),
            g.gamma1 * (d + 2.0) / d * n ** (2.0 / d),
            g.gamma1 * (d + 2.0) / 2.0 * n ** (2.0 / d),
            r / n,
            -r / n**2,
            g.gamma3 * n ** r,
            g.gamma4 * n ** (-2.0 / d),
            clamped,
        )
    return _Local(n, zero, zero, zero, None, None, None, None, clamped)


def _bohm(grid, loc):
    gn = grid.gradient(loc.n)
    return -(2.0 * loc.a * grid.laplacian(loc.n) + loc.b * np.sum(gn**2, axis=0)) / 24.0, gn


def _primitive_potential(regime, n):
    """``psi(n)`` of the primitive regimes, excluding ``V``."""
    grid = regime.grid
    eps2 = regime.eps**2
    if regime.kind == "be-d2":
        nt = n / (2.0 * math.pi * regime.stat.temperature)
        return -eps2 / 12.0 * grid.laplacian(nt)
    return -eps2 / 2.0 * closure.classical_bohm(grid, n)


def _korteweg_force(grid, loc, Q, gn):
    """Divergence of ``(n Q - c |grad n|^2) I + 2 c grad n grad n``, ``c = a/24``; equals ``n grad Q``."""
    c = loc.a / 24.0
    iso = loc.n * Q - c * np.sum(gn**2, axis=0)
    d = grid.dimension
    out = np.empty((d,) + grid.shape)
    for i in range(d):
        row = np.stack([2.0 * c * gn[i] * gn[j] + (iso if i == j else 0.0) for j in range(d)])
        out[i] = grid.divergence(row)
    return out


def _rotational_force(grid, loc, u):
    """Curl-dependent force ``d_k(W R_ij R_kj) + n d_i(G R:R) - (W/4) d_i(R:R)``."""
    d = grid.dimension
    out = np.zeros((d,) + grid.shape)
    if d == 1:
        return out
    R = grid.curl_tensor(u)
    # Curl at rounding level (discrete gradient data) is zeroed: the weights can be
    # exponentially large in degenerate Bose states and would amplify it.
    scale = float(np.max(np.abs(u))) / grid.spacing
    R[np.abs(R) <= CURL_ROUNDING * scale] = 0.0
    RR = np.einsum("jk...,jk...->...", R, R)
    gRR = grid.gradient(RR)
    gGRR = grid.gradient(loc.G * RR)
    for i in range(d):
        flux = np.stack([loc.W * np.einsum("j...,j...->...", R[i], R[k]) for k in range(d)])
        out[i] = grid.divergence(flux) + loc.n * gGRR[i] - 0.25 * loc.W * gRR[i]
    return out


def _check_finite(*arrays):
    for a in arrays:
        if a is not None and not np.all(np.isfinite(a)):
            raise NumericalAbort("non-finite values in the right-hand side")


def hydro_rhs(state, regime):
    """Time derivatives ``(dn/dt, dJ/dt)`` of the hydrodynamic model."""
    if regime.model != "hydro":
        raise DomainError("hydro_rhs needs a hydrodynamic regime")
    grid = regime.grid
    n = np.asarray(state.n, dtype=float)
    J = np.asarray(state.J, dtype=float)
    if regime.primitive:
        u = J / np.maximum(n, N_FLOOR)
        dn, du = _primitive_rhs(regime, n, u)
        return dn, dn * u + n * du
    V = regime.potential
    loc = _local(regime, n)
    u = J / loc.n
    dn = -grid.divergence(J)
    d = grid.dimension
    dJ = np.empty_like(J)
    gp = grid.gradient(loc.pressure)
    gV = grid.gradient(V)
    for i in range(d):
        dJ[i] = -grid.divergence(J[i] * u) - loc.n * gV[i] - gp[i]
    if regime.eps > 0:
        Q, gn = _bohm(grid, loc)
        eps2 = regime.eps**2
        dJ -= eps2 * (_korteweg_force(grid, loc, Q, gn) + _rotational_force(grid, loc, u))
    _check_finite(dn, dJ)
    return dn, dJ


def _primitive_rhs(regime, n, u):
    grid = regime.grid
    dn = -grid.divergence(n * u)
    phi = 0.5 * np.sum(u**2, axis=0) + regime.potential
    if regime.eps > 0:
        phi = phi + _primitive_potential(regime, n)
    du = -grid.gradient(phi)
    _check_finite(dn, du)
    return dn, du


def _face_mean(a, b):
    """Logarithmic mean, which makes ``n_face * d(T log n) = T dn`` exact."""
    diff = b - a
    ratio = b / a
    with np.errstate(divide="ignore", invalid="ignore"):
        lm = diff / np.log(ratio)
    close = np.abs(ratio - 1.0) < 1e-6
    return np.where(close, 0.5 * (a + b), lm)


def diffusion_potential(regime, n):
    """Nodal potential ``Phi`` with ``dn/dt = div(n grad Phi)``."""
    grid = regime.grid
    V = regime.potential
    if regime.primitive:
        loc_n = np.maximum(n, N_FLOOR)
        out = V.copy()
        if regime.eps > 0:
            out = out + _primitive_potential(regime, loc_n)
        return loc_n, out
    loc = _local(regime, n)
    out = loc.chem + V
    if regime.eps > 0:
        Q, _ = _bohm(grid, loc)
        out = out + regime.eps**2 * Q
    return loc.n, out


def diffusion_rhs(state, regime):
    """``dn/dt`` of the diffusive model in face-flux form (grid sum exactly zero)."""
    if regime.model != "diffusive":
        raise DomainError("diffusion_rhs needs a diffusive regime")
    grid = regime.grid
    n, Phi = diffusion_potential(regime, np.asarray(state.n, dtype=float))
    out = np.zeros(grid.shape)
    for a in range(grid.dimension):
        nf = _face_mean(n, np.roll(n, -1, axis=a))
        flux = nf * grid.forward_difference(Phi, a)
        out += grid.backward_divergence(flux, a)
    _check_finite(out)
    return out


# ---------------------------------------------------------------------------
# Time stepping


def _dispersion(regime, n, loc):
    """Coefficient ``kappa`` of the linearised fourth-order (eps^2) term."""
    eps2 = regime.eps**2
    if eps2 == 0:
        return 0.0
    if regime.kind in ("madelung", "be-d1"):
        return eps2 / 4.0
    if regime.kind == "be-d2":
        return eps2 * float(np.max(n)) / (2.0 * math.pi * regime.stat.temperature) / 12.0
    return eps2 * float(np.max(np.abs(loc.n * loc.a))) / 12.0


def stable_timestep(state, regime, courant=COURANT):
    """Largest step allowed by the advective, dispersive and parabolic limits."""
    grid = regime.grid
    h = grid.spacing
    d = grid.dimension
    n = np.maximum(np.asarray(state.n, dtype=float), N_FLOOR)
    loc = None if regime.primitive else _local(regime, n)
    kappa = _dispersion(regime, n, loc)
    c2 = np.zeros(1) if loc is None else loc.sound2
    limits = []
    if regime.model == "hydro":
        umax = float(np.max(np.abs(state.J / n))) if state.J is not None else 0.0
        speed = umax + math.sqrt(max(float(np.max(c2)), 0.0))
        if speed > 0:
            limits.append(h / speed)
        if kappa > 0:
            limits.append(h**2 / (2.0 * d * math.sqrt(kappa)))
    else:
        D = float(np.max(c2))
        if D > 0:
            limits.append(h**2 / (2.0 * d * D))
        if kappa > 0:
            limits.append(h**4 / (8.0 * d**2 * kappa))
    if not limits:
        return math.inf
    return courant * min(limits)


def _rk4(f, y, dt):
    k1 = f(y)
    k2 = f([a + 0.5 * dt * b for a, b in zip(y, k1)])
    k3 = f([a + 0.5 * dt * b for a, b in zip(y, k2)])
    k4 = f([a + dt * b for a, b in zip(y, k3)])
    return [a + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)]


def step(state, regime, dt):
    """Advance one classical RK4 step of size ``dt``.

    Raises
    ------
    NumericalAbort
        On non-finite values or when ``max n`` grows tenfold.
    """
    if dt == 0:
        return state.copy()
    n0 = np.asarray(state.n, dtype=float)
    try:
        if regime.model == "diffusive":
            (n1,) = _rk4(lambda y: [diffusion_rhs(FluidState(0.0, y[0]), regime)], [n0], dt)
            new = FluidState(state.time + dt, n1)
        elif regime.primitive:
            u0 = state.J / np.maximum(n0, N_FLOOR)
            n1, u1 = _rk4(lambda y: list(_primitive_rhs(regime, y[0], y[1])), [n0, u0], dt)
            new = FluidState(state.time + dt, n1, n1 * u1)
        else:
            n1, J1 = _rk4(lambda y: list(hydro_rhs(FluidState(0.0, y[0], y[1]), regime)), [n0, state.J], dt)
            new = FluidState(state.time + dt, n1, J1)
    except NumericalAbort as exc:
        raise NumericalAbort(str(exc), time=state.time) from None
    if not np.all(np.isfinite(new.n)) or (new.J is not None and not np.all(np.isfinite(new.J))):
        raise NumericalAbort("non-finite state after step", time=new.time)
    if float(np.max(new.n)) > GROWTH_LIMIT * float(np.max(n0)):
        raise NumericalAbort("density grew tenfold in one step", time=new.time)
    return new


def run_steps(state, regime, nsteps, dt=None):
    """Take ``nsteps`` steps of fixed size (default: the initial stable step)."""
    if dt is None:
        dt = stable_timestep(state, regime)
    for k in range(nsteps):
        try:
            state = step(state, regime, dt)
        except NumericalAbort as exc:
            raise NumericalAbort(str(exc), step=k, time=state.time) from None
    return state


def integrate(state, regime, t_end, output_times=(), courant=COURANT, max_steps=10_000_000):
    """Integrate to ``t_end`` with adaptive steps, recording snapshots.

    Parameters
    ----------
    state : FluidState
    regime : RegimeSpec
    t_end : float
    output_times : sequence of float
        Extra snapshot times in ``(state.time, t_end)``; steps are shortened to
        land on them exactly. The initial and final states are always recorded.

    Returns
    -------
    list of (float, FluidState, Diagnostics)
    """
    t0 = state.time
    targets = sorted({float(t) for t in output_times if t0 < t < t_end} | {float(t_end)})
    out = [(state.time, state.copy(), diagnostics(state, regime))]
    if t_end <= t0:
        return out
    count = 0
    for target in targets:
        while state.time < target:
            dt = stable_timestep(state, regime, courant)
            remaining = target - state.time
            if dt >= remaining or remaining - dt < 1e-12 * max(1.0, abs(target)):
                dt = remaining
            try:
                state = step(state, regime, dt)
            except NumericalAbort as exc:
                raise NumericalAbort(str(exc), step=count, time=state.time) from None
            if dt == remaining:
                state.time = target
            count += 1
            if count > max_steps:
                raise NumericalAbort("step budget exhausted", step=count, time=state.time)
        out.append((state.time, state.copy(), diagnostics(state, regime)))
    return out


# ---------------------------------------------------------------------------
# Diagnostics and reference solutions


def supercritical_flag(stat, n):
    """True when any density is within the safety margin of the Bose-Einstein critical density."""
    crit = specfun.critical_density(stat)
    if not math.isfinite(crit):
        return False
    return bool(np.any(np.asarray(n) > (1.0 - closure.SUPERCRITICAL_MARGIN) * crit))


def diagnostics(state, regime):
    """Conserved quantities and sanity flags recomputed from ``state``."""
    grid = regime.grid
    d = grid.dimension
    n = np.asarray(state.n, dtype=float)
    mass = grid.integrate(n)
    if state.J is not None:
        momentum = tuple(grid.integrate(state.J[i]) for i in range(d))
        R = grid.curl_tensor(state.velocity())
        curl = float(np.max(np.abs(R))) if d > 1 else 0.0
    else:
        momentum = (0.0,) * d
        curl = 0.0
    supercritical = supercritical_flag(regime.stat, n)
    return Diagnostics(
        time=float(state.time),
        mass=mass,
        momentum=momentum,
        max_abs_curl=curl,
        min_density=float(np.min(n)),
        supercritical=supercritical,
        clamped=int(np.count_nonzero(n < N_FLOOR)),
    )


def schrodinger_reference(grid, psi0, V, eps, t_end, steps=None):
    """Strang split-step Fourier solution of ``i eps psi_t = -(eps^2/2) lap psi + V psi``.

    Parameters
    ----------
    grid : Grid
        One-dimensional periodic grid.
    psi0 : complex ndarray
    V : ndarray
    eps : float
    t_end : float
    steps : int, optional
        Number of steps; default keeps ``dt <= h^2 / eps`` and at least 1000.

    Returns
    -------
    n, u, psi : ndarray
        Density ``|psi|^2``, velocity ``eps Im(conj(psi) psi_x) / |psi|^2`` and the final wave function.
    """
    if grid.dimension != 1:
        raise DomainError("the Schroedinger reference is one-dimensional")
    psi = np.asarray(psi0, dtype=complex).copy()
    V = np.zeros(grid.shape) if V is None else np.asarray(V, dtype=float)
    k = 2.0 * np.pi * np.fft.fftfreq(grid.points, d=grid.spacing)
    if steps is None:
        steps = max(1000, int(math.ceil(t_end * eps / grid.spacing**2)))
    dt = t_end / steps
    half_pot = np.exp(-0.5j * dt * V / eps)
    kinetic = np.exp(-0.5j * eps * dt * k**2)
    norm0 = grid.integrate(np.abs(psi) ** 2)
    for _ in range(steps):
        psi = half_pot * psi
        psi = np.fft.ifft(kinetic * np.fft.fft(psi))
        psi = half_pot * psi
    norm = grid.integrate(np.abs(psi) ** 2)
    if abs(norm / norm0 - 1.0) > 1e-10:
        raise NumericalAbort(f"Schroedinger norm drift {abs(norm / norm0 - 1.0):.2e}")
    n = np.abs(psi) ** 2
    dpsi = np.fft.ifft(1j * k * np.fft.fft(psi))
    u = eps * np.imag(np.conj(psi) * dpsi) / np.maximum(n, N_FLOOR)
    return n, u[None, :], psi
