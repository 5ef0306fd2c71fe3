"""How the three statistics differ, seen through phi_s and the Bose critical density.

Run: python3 demos/01_statistics.py
"""

import numpy as np

from qfluid import Statistics, specfun
from qfluid.closure import critical_temperature

z = np.linspace(-6.0, -0.01, 7)
print("phi_{3/2}(z) for the three statistics (z < 0 so all are defined)")
print(f"{'z':>8} {'FD':>12} {'MB':>12} {'BE':>12}")
for zi in z:
    row = [specfun.phi(Statistics(lam), 1.5, zi) for lam in (1.0, 0.0, -1.0)]
    print(f"{zi:8.3f} " + " ".join(f"{v:12.6f}" for v in row))

# Deep in the classical tail all three agree: phi ~ e^z.
print("\nat z = -6 the spread is", np.ptp([specfun.phi(Statistics(l), 1.5, -6.0) for l in (1, 0, -1)]))

# Bose gas in d = 3: density cannot exceed zeta(3/2) (2 pi T)^{3/2}.
print("\nBose gas in d = 3")
for T in (0.5, 1.0, 2.0):
    stat = Statistics(-1.0, T, 3)
    nc = specfun.critical_density(stat)
    print(f"  T = {T:3.1f}  n_c = {nc:10.4f}  T_c(n_c) = {float(critical_temperature(stat, nc)):.12f}")
