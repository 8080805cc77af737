"""
Norms of the planar singular basis
==================================

Tracks the L2 norm of g_k as N solenoids of flux alpha collapse to the
origin, and the Bessel constant C_a of the limit profile.
"""

import math

import numpy as np

from knotflux.model2d import C_a, g_norm_table, limit_profile_distance

etas = np.geomspace(1e-4, 1e-2, 5)

# %%
# Bounded, logarithmic and power-divergent cases
for N, alpha, k in ((2, 0.3, 0), (2, 0.5, 0), (2, 0.9, 0), (3, 0.8, 0)):
    norms = np.array(g_norm_table(N, alpha, k, etas))
    slope = np.polyfit(np.log(etas), np.log(norms), 1)[0]
    print(f"N={N} alpha={alpha} k={k}  N alpha - k = {N * alpha - k:.2f}  "
          f"slope {slope:+.3f}  norms {np.array2string(norms, precision=4)}")

# %%
# C_a against pi^2 / sin(pi a)
for a in (0.1, 0.3, 0.5):
    print(f"C_{a} = {C_a(a):.12f}   pi^2/sin = {math.pi**2 / math.sin(math.pi * a):.12f}")

# %%
# Distance of the normalised profile to its Bessel limit
print("distances", limit_profile_distance(2, 0.8, [1e-2, 3e-3, 1e-3]))
