"""The quantum closure interpolates between known limits.

At lambda -> 0 the Bohm coefficients become (1/n, -1/n^2), the classical
Bohm potential. At T -> 0 for fermions the coefficient a approaches
(d-2)/(d n), so the Bohm term flips sign between d = 1 and d = 3.

Run: python3 demos/02_closure_limits.py
"""

import numpy as np

from qfluid import Statistics
from qfluid.closure import bohm_coefficients

n = np.array([0.5, 1.0, 2.0])

print("classical limit, d = 1: n * a and n^2 * b")
for lam in (1.0, 1e-2, 1e-4, 1e-6):
    a, b = bohm_coefficients(Statistics(lam, 1.0, 1), n)
    print(f"  lambda = {lam:7.0e}  n a = {np.round(n * a, 6)}  n^2 b = {np.round(n**2 * b, 6)}")

print("\ndegenerate Fermi limit: n * a against (d - 2)/d")
for d in (1, 2, 3):
    for T in (1e-1, 1e-2, 1e-3):
        a, _ = bohm_coefficients(Statistics(1.0, T, d), n)
        print(f"  d = {d}  T = {T:5.0e}  n a = {np.round(n * a, 5)}  target {(d - 2) / d:+.5f}")
