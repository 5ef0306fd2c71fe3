"""Drift-diffusion relaxes to thermal equilibrium in a potential well.

For classical statistics the steady state is exp(-V/T). For a Fermi gas
the steady state is characterised by a constant electrochemical potential
A0(n) + V. Both are checked here.

Run: python3 demos/04_drift_diffusion.py
"""

import math

import numpy as np

from qfluid import Grid, Statistics, solvers
from qfluid.closure import DensityClosure

grid = Grid(1, 64, 2 * math.pi)
(x,) = grid.coordinates()
V = 0.5 * np.cos(x)
n0 = 0.5 + np.random.default_rng(0).random(grid.shape)

print("classical gas: L2 distance to exp(-V)")
mb = solvers.RegimeSpec("mb", "diffusive", 0.0, Statistics(0.0, 1.0, 1), grid, V)
ref = np.exp(-V) * grid.integrate(n0) / grid.integrate(np.exp(-V))
for t, state, _ in solvers.integrate(solvers.FluidState(0.0, n0), mb, 40.0, output_times=[5, 10, 20, 30]):
    err = math.sqrt(grid.integrate((state.n - ref) ** 2) / grid.integrate(ref**2))
    print(f"  t = {t:5.1f}  {err:.3e}")

print("\nFermi gas, d = 2: spread of A0(n) + V relative to spread of V")
g2 = Grid(2, 16, 2 * math.pi)
x, y = g2.coordinates()
V2 = 0.5 * np.cos(x) + 0.3 * np.sin(y)
stat = Statistics(1.0, 1.0, 2)
fd = solvers.RegimeSpec("general", "diffusive", 0.0, stat, g2, V2)
n0 = 0.5 + np.random.default_rng(1).random(g2.shape)
for t, state, _ in solvers.integrate(solvers.FluidState(0.0, n0), fd, 20.0, output_times=[2, 5, 10]):
    mu = DensityClosure(stat, state.n).A0 + V2
    print(f"  t = {t:5.1f}  {np.ptp(mu) / np.ptp(V2):.3e}")
