"""A Gaussian pure state spreads; the Madelung fluid and the Schroedinger equation agree.

The rms width follows sigma(t) = sigma0 sqrt(1 + (eps t / (2 sigma0^2))^2).

Run: python3 demos/03_madelung_spreading.py
"""

import math
from pathlib import Path

import numpy as np

from qfluid import app, solvers

cfg = app.parse_config((Path(__file__).parent / "configs" / "madelung.cfg").read_text())
grid = cfg.grid
x = grid.axis() - cfg.grid_length / 2
regime = solvers.RegimeSpec("madelung", "hydro", cfg.physics_eps, cfg.statistics, grid)
times = [0.25, 0.5, 0.75, 1.0]
records = solvers.integrate(app.initial_state(cfg, grid), regime, cfg.output_t_end, output_times=times)

psi0 = app.pure_state_wavefunction(cfg, grid)
print(f"{'t':>5} {'width (fluid)':>14} {'width (law)':>12} {'L2 gap to Schroedinger':>24}")
for t, state, _ in records:
    if t == 0.0:
        continue
    n_s, _, _ = solvers.schrodinger_reference(grid, psi0, None, cfg.physics_eps, t)
    width = math.sqrt(grid.integrate(x**2 * state.n) / grid.integrate(state.n))
    law = cfg.initial_width * math.sqrt(1 + (cfg.physics_eps * t / (2 * cfg.initial_width**2)) ** 2)
    gap = math.sqrt(grid.integrate((state.n - n_s) ** 2) / grid.integrate(n_s**2))
    print(f"{t:5.2f} {width:14.8f} {law:12.8f} {gap:24.2e}")
